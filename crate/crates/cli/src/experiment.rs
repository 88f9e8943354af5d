//! One benchmark cell end to end: data, split, statistics, training, scoring.

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sparseseq_core::apc::{pretrain, ApcLoss};
use sparseseq_core::classify::{train_classifier, Imbalance, Model, Selection, TrainMode};
use sparseseq_core::datagen::{build_benchmark, ImbalanceRatio, SyntheticParams};
use sparseseq_core::encoders::{impute_view, InputView, Scheme};
use sparseseq_core::ingest::{compute_stats, normalize, split, NormStats, TimeSeriesDataset, DEFAULT_FRACTIONS};
use sparseseq_core::metrics::{argmax, auprc, auroc, f1_scores};
use sparseseq_core::numcore::derive_seed;

use crate::config::{Hyper, ModelName};

/// Benchmark coordinates of a synthetic cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub ratio: ImbalanceRatio,
    pub missing: f64,
}

impl Cell {
    pub fn id(&self) -> String {
        format!("{}|{}", self.ratio, self.missing)
    }

    fn seed_path(&self) -> [u64; 3] {
        [self.ratio.minority as u64, self.ratio.majority as u64, self.missing.to_bits()]
    }

    /// Seed of the benchmark data; shared by every model and run of the cell.
    pub fn data_seed(&self, master: u64) -> u64 {
        let [a, b, c] = self.seed_path();
        derive_seed(master, &[0, a, b, c])
    }

    /// Seed of one training run, a pure function of cell, model and run.
    pub fn run_seed(&self, master: u64, model: ModelName, run: usize) -> u64 {
        let [a, b, c] = self.seed_path();
        derive_seed(master, &[1, a, b, c, model.code(), run as u64])
    }
}

/// Normalised splits. Statistics come from the training split alone.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub stats: NormStats,
    pub train: TimeSeriesDataset,
    pub val: TimeSeriesDataset,
    pub test: TimeSeriesDataset,
}

pub fn prepare(dataset: &TimeSeriesDataset, split_seed: u64, per_position_mean: bool) -> anyhow::Result<Prepared> {
    let s = split(dataset, DEFAULT_FRACTIONS, split_seed)?;
    prepare_splits(s.train, s.val, s.test, per_position_mean)
}

pub fn prepare_splits(
    train: TimeSeriesDataset,
    val: TimeSeriesDataset,
    test: TimeSeriesDataset,
    per_position_mean: bool,
) -> anyhow::Result<Prepared> {
    let stats = compute_stats(&train, per_position_mean)?;
    Ok(Prepared {
        train: normalize(&train, &stats),
        val: normalize(&val, &stats),
        test: normalize(&test, &stats),
        stats,
    })
}

pub struct Views {
    pub train: InputView,
    pub val: InputView,
    pub test: InputView,
}

impl Prepared {
    pub fn views(&self, scheme: Scheme) -> anyhow::Result<Views> {
        Ok(Views {
            train: impute_view(&self.train, &self.stats, scheme)?,
            val: impute_view(&self.val, &self.stats, scheme)?,
            test: impute_view(&self.test, &self.stats, scheme)?,
        })
    }
}

/// Builds and prepares a synthetic cell.
pub fn prepare_cell(cell: &Cell, base: &SyntheticParams, master: u64) -> anyhow::Result<Prepared> {
    let params = SyntheticParams {
        missing_rate: cell.missing,
        ratio: cell.ratio,
        seed: cell.data_seed(master),
        ..base.clone()
    };
    let ds = build_benchmark(&params).with_context(|| format!("building cell {}", cell.id()))?;
    prepare(&ds, derive_seed(params.seed, &[7]), false)
}

/// Test-set scores, all in percent. Ranking metrics are absent for
/// multiclass data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    pub f1_weighted: f64,
    pub f1_minority: f64,
    pub f1_per_class: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn score(probs: &[Vec<f64>], labels: &[usize], n_classes: usize) -> anyhow::Result<Scores> {
    let preds: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let f1 = f1_scores(&preds, labels, n_classes)?;
    let (roc, pr) = if n_classes == 2 {
        let s: Vec<f64> = probs.iter().map(|p| p[1]).collect();
        (Some(100.0 * auroc(&s, labels)?), Some(100.0 * auprc(&s, labels)?))
    } else {
        (None, None)
    };
    Ok(Scores {
        auroc: roc,
        auprc: pr,
        f1_weighted: f1.weighted,
        f1_minority: f1.weighted_minority,
        f1_per_class: f1.per_class,
        warnings: f1.warnings,
    })
}

/// How one model is trained within a cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub model: ModelName,
    pub hyper: Hyper,
    /// Ignored for baselines, which always train from scratch.
    pub modes: Vec<TrainMode>,
    pub imbalance: Imbalance,
    pub shift: usize,
    pub loss: ApcLoss,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub mode: TrainMode,
    pub scores: Scores,
    pub selection: Selection,
    pub model: Model,
}

/// Trains `protocol` once. APC models are pre-trained once and every
/// requested mode is trained from that encoder.
pub fn run_protocol(prepared: &Prepared, protocol: &Protocol, seed: u64) -> anyhow::Result<Vec<Outcome>> {
    let enc = protocol.hyper.encoder(protocol.model)?;
    let views = prepared.views(enc.scheme)?;
    let (pretrained, modes) = if protocol.model.is_apc() {
        let apc = protocol.hyper.apc(protocol.shift, protocol.loss);
        let p = pretrain(&enc, &views.train, &apc, derive_seed(seed, &[0]))?;
        (Some(p.params), protocol.modes.clone())
    } else {
        (None, vec![TrainMode::Scratch])
    };
    modes
        .into_iter()
        .map(|mode| {
            let plan = protocol.hyper.plan(mode, protocol.imbalance)?;
            let trained = train_classifier(pretrained.as_ref(), &enc, &views.train, &views.val, &plan, derive_seed(seed, &[1]))?;
            let probs = trained.model.predict(&views.test)?;
            let scores = score(&probs, &views.test.labels(), views.test.n_classes)?;
            Ok(Outcome {
                mode,
                scores,
                selection: trained.selection,
                model: trained.model,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_seeds_are_distinct() {
        let cells = [
            Cell { ratio: ImbalanceRatio::new(1, 1), missing: 0.0 },
            Cell { ratio: ImbalanceRatio::new(1, 20), missing: 0.3 },
            Cell { ratio: ImbalanceRatio::new(1, 20), missing: 0.6 },
        ];
        let mut seen = std::collections::HashSet::new();
        for c in &cells {
            for m in ModelName::ALL {
                for r in 0..3 {
                    assert!(seen.insert(c.run_seed(9, m, r)));
                    assert_eq!(c.run_seed(9, m, r), c.run_seed(9, m, r));
                }
            }
        }
    }

    #[test]
    fn scores_in_percent() {
        let probs = vec![vec![0.1, 0.9], vec![0.8, 0.2], vec![0.3, 0.7], vec![0.6, 0.4]];
        let s = score(&probs, &[1, 0, 1, 0], 2).unwrap();
        assert_eq!(s.auroc, Some(100.0));
        assert_eq!(s.auprc, Some(100.0));
        assert_eq!(s.f1_weighted, 100.0);
    }
}
