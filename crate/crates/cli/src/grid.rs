//! The missingness × imbalance grid and the time-shift sweep.
//!
//! Each job trains one model once in one cell and appends its rows to a CSV
//! file as soon as it finishes. Re-running against the same file skips every
//! job that already has successful rows.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fs::OpenOptions;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sparseseq_core::apc::ApcLoss;
use sparseseq_core::classify::{Imbalance, TrainMode};
use sparseseq_core::datagen::{ImbalanceRatio, SyntheticParams};

use crate::config::{Hyper, HyperOverrides, ModelName, Preset};
use crate::experiment::{prepare_cell, run_protocol, Cell, Prepared, Protocol};
use crate::report::{ResultRow, ResultsTable};

fn default_runs() -> usize {
    3
}
fn default_shift() -> usize {
    1
}
fn default_n() -> usize {
    2000
}
fn default_t() -> usize {
    100
}
fn default_noise() -> f64 {
    0.1
}
fn default_preset() -> Preset {
    Preset::Synthetic
}
fn default_loss() -> ApcLoss {
    ApcLoss::MaskedMse
}
fn default_apc_mode() -> TrainMode {
    TrainMode::FineTuned
}
fn default_baseline_imbalance() -> Imbalance {
    Imbalance::ClassWeights
}
fn default_apc_imbalance() -> Imbalance {
    Imbalance::None
}

/// Shape of the synthetic data shared by every cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    #[serde(default = "default_n")]
    pub n_samples: usize,
    #[serde(default = "default_t")]
    pub seq_len: usize,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            n_samples: default_n(),
            seq_len: default_t(),
            noise_std: default_noise(),
        }
    }
}

impl DataSpec {
    fn params(&self) -> SyntheticParams {
        SyntheticParams {
            n_samples: self.n_samples,
            seq_len: self.seq_len,
            noise_std: self.noise_std,
            ..SyntheticParams::default()
        }
    }
}

/// Training settings shared by grid and sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSpec {
    #[serde(default = "default_preset")]
    pub preset: Preset,
    /// Per-model overrides on top of the preset.
    #[serde(default)]
    pub hyper: BTreeMap<ModelName, HyperOverrides>,
    #[serde(default = "default_loss")]
    pub loss: ApcLoss,
    /// Baselines are trained from scratch with this imbalance method.
    #[serde(default = "default_baseline_imbalance")]
    pub baseline_imbalance: Imbalance,
    /// APC models are trained with this one.
    #[serde(default = "default_apc_imbalance")]
    pub apc_imbalance: Imbalance,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            hyper: BTreeMap::new(),
            loss: default_loss(),
            baseline_imbalance: default_baseline_imbalance(),
            apc_imbalance: default_apc_imbalance(),
        }
    }
}

impl TrainingSpec {
    pub fn hyper(&self, model: ModelName) -> Hyper {
        let base = Hyper::preset(self.preset, model);
        match self.hyper.get(&model) {
            Some(o) => base.apply(o),
            None => base,
        }
    }

    fn protocol(&self, model: ModelName, modes: Vec<TrainMode>, shift: usize) -> Protocol {
        Protocol {
            model,
            hyper: self.hyper(model),
            modes,
            imbalance: if model.is_apc() {
                self.apc_imbalance
            } else {
                self.baseline_imbalance
            },
            shift,
            loss: self.loss,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub imbalance: Vec<ImbalanceRatio>,
    pub missing: Vec<f64>,
    pub models: Vec<ModelName>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Time shift of the APC models.
    #[serde(default = "default_shift")]
    pub shift: usize,
    #[serde(default = "default_apc_mode")]
    pub apc_mode: TrainMode,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub training: TrainingSpec,
}

impl GridSpec {
    /// The full synthetic grid: three imbalance levels, three missing rates,
    /// the four headline models, three runs.
    pub fn full(master_seed: u64) -> Self {
        Self {
            imbalance: vec![ImbalanceRatio::new(1, 1), ImbalanceRatio::new(3, 7), ImbalanceRatio::new(1, 20)],
            missing: vec![0.0, 0.3, 0.6],
            models: vec![ModelName::Gru, ModelName::GruD, ModelName::GruApc, ModelName::GruDApc],
            runs: 3,
            master_seed,
            shift: 1,
            apc_mode: TrainMode::FineTuned,
            data: DataSpec::default(),
            training: TrainingSpec::default(),
        }
    }

    fn cells(&self) -> Vec<Cell> {
        self.imbalance
            .iter()
            .flat_map(|&ratio| self.missing.iter().map(move |&missing| Cell { ratio, missing }))
            .collect()
    }

    pub fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::new();
        for cell in self.cells() {
            for &model in &self.models {
                for run in 0..self.runs {
                    jobs.push(Job {
                        cell,
                        protocol: self.training.protocol(model, vec![self.apc_mode], self.shift),
                        run,
                    });
                }
            }
        }
        jobs
    }
}

/// APC pre-training at several time shifts in one cell, each evaluated in
/// several downstream modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub imbalance: ImbalanceRatio,
    pub missing: f64,
    pub model: ModelName,
    pub shifts: Vec<usize>,
    pub modes: Vec<TrainMode>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub training: TrainingSpec,
}

impl SweepSpec {
    pub fn jobs(&self) -> anyhow::Result<Vec<Job>> {
        anyhow::ensure!(self.model.is_apc(), "shift sweeps need an APC model, got {}", self.model);
        let cell = Cell {
            ratio: self.imbalance,
            missing: self.missing,
        };
        Ok(self
            .shifts
            .iter()
            .flat_map(|&shift| {
                (0..self.runs).map(move |run| Job {
                    cell,
                    protocol: self.training.protocol(self.model, self.modes.clone(), shift),
                    run,
                })
            })
            .collect())
    }
}

#[derive(Clone, Debug)]
pub struct Job {
    pub cell: Cell,
    pub protocol: Protocol,
    pub run: usize,
}

/// Identifies a result row across invocations.
pub type RowKey = (String, String, String, usize, usize);

impl Job {
    fn modes(&self) -> Vec<TrainMode> {
        if self.protocol.model.is_apc() {
            self.protocol.modes.clone()
        } else {
            vec![TrainMode::Scratch]
        }
    }

    /// Keys of the rows this job produces, one per training mode.
    pub fn keys(&self) -> Vec<RowKey> {
        self.modes()
            .into_iter()
            .map(|m| {
                (
                    self.cell.id(),
                    self.protocol.model.to_string(),
                    m.to_string(),
                    self.shift(),
                    self.run,
                )
            })
            .collect()
    }

    fn shift(&self) -> usize {
        if self.protocol.model.is_apc() {
            self.protocol.shift
        } else {
            0
        }
    }

    fn base_row(&self, mode: TrainMode, seed: u64) -> ResultRow {
        ResultRow {
            cell: self.cell.id(),
            imbalance: self.cell.ratio.to_string(),
            missing: self.cell.missing,
            model: self.protocol.model.to_string(),
            mode: mode.to_string(),
            shift: self.shift(),
            method: self.protocol.imbalance.to_string(),
            run: self.run,
            seed,
            ..ResultRow::default()
        }
    }

    /// Trains the job; failures become rows carrying the error text.
    pub fn execute(&self, prepared: &anyhow::Result<Prepared>, master_seed: u64) -> Vec<ResultRow> {
        let seed = self.cell.run_seed(master_seed, self.protocol.model, self.run);
        let start = Instant::now();
        let result = prepared
            .as_ref()
            .map_err(|e| anyhow::anyhow!("{e:#}"))
            .and_then(|p| run_protocol(p, &self.protocol, seed));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(outcomes) => outcomes
                .into_iter()
                .map(|o| ResultRow {
                    auroc: o.scores.auroc,
                    auprc: o.scores.auprc,
                    f1_weighted: Some(o.scores.f1_weighted),
                    f1_minority: Some(o.scores.f1_minority),
                    selected_stage: o.selection.stage,
                    selected_epoch: o.selection.epoch,
                    wall_time: secs,
                    ..self.base_row(o.mode, seed)
                })
                .collect(),
            Err(e) => self
                .modes()
                .into_iter()
                .map(|m| ResultRow {
                    wall_time: secs,
                    error: format!("{e:#}"),
                    ..self.base_row(m, seed)
                })
                .collect(),
        }
    }
}

/// Runs `jobs` on up to `workers` threads, appending rows to `out` as they
/// complete. Returns the table of the latest row per key, in job order.
pub fn run_jobs(jobs: &[Job], data: &DataSpec, master_seed: u64, out: &Path, workers: usize) -> anyhow::Result<ResultsTable> {
    let done: HashSet<RowKey> = if out.exists() {
        ResultsTable::read_csv(out)?
            .rows
            .into_iter()
            .filter(|r| r.error.is_empty())
            .map(|r| r.key())
            .collect()
    } else {
        HashSet::new()
    };
    let pending: VecDeque<&Job> = jobs
        .iter()
        .filter(|j| !j.keys().iter().all(|k| done.contains(k)))
        .collect();

    let fresh = std::fs::metadata(out).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out)
        .with_context(|| format!("opening {}", out.display()))?;
    let writer = Mutex::new(csv::WriterBuilder::new().has_headers(fresh).from_writer(file));
    let queue = Mutex::new(pending);
    let params = data.params();
    let cache: Mutex<BTreeMap<String, std::sync::Arc<anyhow::Result<Prepared>>>> = Mutex::new(BTreeMap::new());

    std::thread::scope(|s| -> anyhow::Result<()> {
        let handles: Vec<_> = (0..workers.max(1))
            .map(|_| {
                s.spawn(|| -> anyhow::Result<()> {
                    loop {
                        let Some(job) = queue.lock().expect("queue").pop_front() else {
                            return Ok(());
                        };
                        let prepared = {
                            let mut c = cache.lock().expect("cache");
                            c.entry(job.cell.id())
                                .or_insert_with(|| std::sync::Arc::new(prepare_cell(&job.cell, &params, master_seed)))
                                .clone()
                        };
                        let rows = job.execute(&prepared, master_seed);
                        let mut w = writer.lock().expect("writer");
                        for r in &rows {
                            w.serialize(r)?;
                        }
                        w.flush()?;
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().expect("worker panicked")?;
        }
        Ok(())
    })?;
    drop(writer);

    let mut latest: BTreeMap<RowKey, ResultRow> = BTreeMap::new();
    for r in ResultsTable::read_csv(out)?.rows {
        let key = r.key();
        // A successful row is never displaced by a later failure.
        if r.error.is_empty() || latest.get(&key).is_none_or(|old| !old.error.is_empty()) {
            latest.insert(key, r);
        }
    }
    let rows = jobs
        .iter()
        .flat_map(|j| j.keys())
        .filter_map(|k| latest.remove(&k))
        .collect();
    Ok(ResultsTable { rows })
}

pub fn run_grid(spec: &GridSpec, out: &Path, workers: usize) -> anyhow::Result<ResultsTable> {
    run_jobs(&spec.jobs(), &spec.data, spec.master_seed, out, workers)
}

pub fn sweep_shift(spec: &SweepSpec, out: &Path, workers: usize) -> anyhow::Result<ResultsTable> {
    run_jobs(&spec.jobs()?, &spec.data, spec.master_seed, out, workers)
}
