use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sparseseq_cli::config::{Hyper, HyperOverrides, ModelName, Preset};
use sparseseq_cli::experiment::{prepare_splits, score};
use sparseseq_cli::grid::{run_grid, sweep_shift, GridSpec, SweepSpec};
use sparseseq_cli::report::{render_plotdata, render_table, Metric, ResultsTable};
use sparseseq_core::apc::{pretrain, ApcLoss};
use sparseseq_core::classify::{train_classifier, Imbalance, Model, TrainMode};
use sparseseq_core::datagen::{build_benchmark, ImbalanceRatio, SyntheticParams};
use sparseseq_core::encoders::{impute_view, EncoderConfig, EncoderKind, Scheme};
use sparseseq_core::ingest::{compute_stats, normalize, split, NormStats, TimeSeriesDataset, DEFAULT_FRACTIONS};
use sparseseq_core::ParamSet;

#[derive(Parser)]
#[command(name = "sparseseq", version, about = "APC pre-training for sparse, imbalanced time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one synthetic benchmark dataset.
    GenSynthetic {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        t: usize,
        #[arg(long, default_value_t = 0.0)]
        missing: f64,
        /// Minority:majority ratio such as 1:20.
        #[arg(long, default_value = "1:1")]
        ratio: ImbalanceRatio,
        #[arg(long, default_value_t = 0.1)]
        noise_std: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified 60/20/20 split into train.jsonl, val.jsonl and test.jsonl.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// APC pre-training on a training split.
    Pretrain {
        /// gru or gru-d.
        #[arg(long, default_value = "gru")]
        encoder: EncoderKind,
        /// Input scheme; the encoder's own (flags or grud) when omitted.
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long, default_value_t = 1)]
        shift: usize,
        #[arg(long, default_value = "masked-mse")]
        loss: ApcLoss,
        /// Training split, e.g. train.jsonl written by `split`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "synthetic")]
        preset: Preset,
        /// JSON file overriding individual hyperparameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier, from scratch or on top of a pre-trained encoder.
    Train {
        /// Model name; taken from --init when omitted.
        #[arg(long)]
        model: Option<ModelName>,
        /// Output of `pretrain`.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value = "scratch")]
        mode: TrainMode,
        /// none, cw, os, us or os-cw:F.
        #[arg(long, default_value = "none")]
        imbalance: Imbalance,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value = "synthetic")]
        preset: Preset,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Subset of auroc, auprc and f1 to report.
        #[arg(long, value_delimiter = ',', default_value = "auroc,auprc,f1")]
        metrics: Vec<String>,
        /// Where to write the scores as JSON; printed when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the missingness × imbalance grid.
    Grid {
        /// Grid spec (JSON). The full grid is run when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, env = "SPARSESEQ_WORKERS", default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the APC time-shift sweep.
    SweepShift {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, env = "SPARSESEQ_WORKERS", default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate a results CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// auroc, auprc, f1-weighted or f1-minority.
        #[arg(long, default_value = "auprc")]
        metric: Metric,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
    Plotdata,
}

/// What `pretrain` writes.
#[derive(Serialize, Deserialize)]
struct PretrainedFile {
    model: ModelName,
    encoder: EncoderConfig,
    shift: usize,
    loss: ApcLoss,
    params: serde_json::Value,
}

/// What `train` writes.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    model: serde_json::Value,
    stats: NormStats,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenSynthetic {
            n,
            t,
            missing,
            ratio,
            noise_std,
            seed,
            out,
        } => {
            let ds = build_benchmark(&SyntheticParams {
                n_samples: n,
                seq_len: t,
                missing_rate: missing,
                ratio,
                noise_std,
                seed,
                ..SyntheticParams::default()
            })?;
            ds.save(&out)?;
            let counts = ds.class_counts();
            eprintln!("wrote {} sequences ({} positive) to {}", ds.len(), counts[1], out.display());
        }
        Command::Split { data, seed, out_dir } => {
            let ds = load(&data)?;
            let s = split(&ds, DEFAULT_FRACTIONS, seed)?;
            fs::create_dir_all(&out_dir)?;
            for (name, part) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
                part.save(out_dir.join(format!("{name}.jsonl")))?;
                eprintln!("{name}: {} sequences, class counts {:?}", part.len(), part.class_counts());
            }
        }
        Command::Pretrain {
            encoder,
            scheme,
            shift,
            loss,
            data,
            preset,
            config,
            seed,
            out,
        } => {
            let model = match encoder {
                EncoderKind::Gru => ModelName::GruApc,
                EncoderKind::GruD => ModelName::GruDApc,
            };
            let hyper = hyper(preset, model, config.as_deref())?;
            let mut enc = hyper.encoder(model)?;
            if let Some(s) = scheme {
                enc.scheme = s;
            }
            enc.validate()?;
            let train = load(&data)?;
            let stats = compute_stats(&train, false)?;
            let view = impute_view(&normalize(&train, &stats), &stats, enc.scheme)?;
            let p = pretrain(&enc, &view, &hyper.apc(shift, loss), seed)?;
            let file = PretrainedFile {
                model,
                encoder: enc,
                shift,
                loss,
                params: serde_json::from_str(&p.params.to_json()?)?,
            };
            write_json(&out, &file)?;
            let mut w = csv::Writer::from_path(out.with_extension("losses.csv"))?;
            w.write_record(["epoch", "loss"])?;
            for (i, l) in p.losses.iter().enumerate() {
                w.write_record([(i + 1).to_string(), l.to_string()])?;
            }
            w.flush()?;
            eprintln!("final pre-training loss {:.5}", p.losses.last().copied().unwrap_or(f64::NAN));
        }
        Command::Train {
            model,
            init,
            mode,
            imbalance,
            data_dir,
            preset,
            config,
            seed,
            out,
        } => {
            let pre: Option<PretrainedFile> = init.as_deref().map(read_json).transpose()?;
            let model = match (model, &pre) {
                (Some(m), Some(p)) if m != p.model => bail!("--model {m} disagrees with --init ({})", p.model),
                (Some(m), _) => m,
                (None, Some(p)) => p.model,
                (None, None) => bail!("either --model or --init is required"),
            };
            if mode != TrainMode::Scratch && pre.is_none() {
                bail!("mode {mode} needs --init");
            }
            let hyper = hyper(preset, model, config.as_deref())?;
            let enc = match &pre {
                Some(p) => p.encoder,
                None => hyper.encoder(model)?,
            };
            let pretrained = pre
                .as_ref()
                .map(|p| ParamSet::from_json(&p.params.to_string()))
                .transpose()?;
            let [train, val, test] = ["train", "val", "test"].map(|s| load(&data_dir.join(format!("{s}.jsonl"))));
            let prepared = prepare_splits(train?, val?, test?, false)?;
            let views = prepared.views(enc.scheme)?;
            let plan = hyper.plan(mode, imbalance)?;
            let trained = train_classifier(pretrained.as_ref(), &enc, &views.train, &views.val, &plan, seed)?;
            write_json(
                &out,
                &ModelFile {
                    model: serde_json::from_str(&trained.model.to_json()?)?,
                    stats: prepared.stats,
                },
            )?;
            let mut w = csv::Writer::from_path(out.with_extension("history.csv"))?;
            for r in &trained.history {
                w.serialize(r)?;
            }
            w.flush()?;
            write_json(&out.with_extension("selection.json"), &trained.selection)?;
            let s = &trained.selection;
            eprintln!("selected {} epoch {} (validation {:.4})", s.stage, s.epoch, s.metric);
        }
        Command::Eval {
            model,
            data,
            metrics,
            out,
        } => {
            let file: ModelFile = read_json(&model)?;
            let m = Model::from_json(&file.model.to_string())?;
            let ds = load(&data)?;
            ensure!(ds.n_vars() == m.n_vars, "dataset has {} variables, model expects {}", ds.n_vars(), m.n_vars);
            let view = impute_view(&normalize(&ds, &file.stats), &file.stats, m.encoder.scheme)?;
            let scores = score(&m.predict(&view)?, &view.labels(), m.n_classes)?;
            let scores = select_metrics(serde_json::to_value(scores)?, &metrics)?;
            match out {
                Some(p) => write_json(&p, &scores)?,
                None => println!("{}", serde_json::to_string_pretty(&scores)?),
            }
        }
        Command::Grid { spec, workers, out } => {
            let spec = match spec {
                Some(p) => read_json(&p)?,
                None => GridSpec::full(0),
            };
            let table = run_grid(&spec, &out, workers.max(1))?;
            summarise_run(&table);
        }
        Command::SweepShift { spec, workers, out } => {
            let spec: SweepSpec = read_json(&spec)?;
            let table = sweep_shift(&spec, &out, workers.max(1))?;
            summarise_run(&table);
        }
        Command::Report { input, format, metric } => {
            let table = ResultsTable::read_csv(&input)?;
            let text = match format {
                Format::Table => render_table(&table, metric),
                Format::Csv => table.to_csv()?,
                Format::Plotdata => render_plotdata(&table, metric)?,
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn hyper(preset: Preset, model: ModelName, config: Option<&Path>) -> Result<Hyper> {
    let base = Hyper::preset(preset, model);
    Ok(match config {
        Some(p) => base.apply(&HyperOverrides::load(p)?),
        None => base,
    })
}

fn load(path: &Path) -> Result<TimeSeriesDataset> {
    TimeSeriesDataset::load(path).with_context(|| format!("loading {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer(BufWriter::new(f), value)?;
    Ok(())
}

/// Keeps the requested metric groups; `f1` covers the whole F1 family.
fn select_metrics(scores: serde_json::Value, wanted: &[String]) -> Result<serde_json::Value> {
    let serde_json::Value::Object(all) = scores else {
        bail!("scores are not an object");
    };
    let mut keep = vec!["warnings"];
    for w in wanted {
        match w.trim().to_ascii_lowercase().as_str() {
            "auroc" => keep.push("auroc"),
            "auprc" => keep.push("auprc"),
            "f1" => keep.extend(["f1_weighted", "f1_minority", "f1_per_class"]),
            other => bail!("unknown metric '{other}'"),
        }
    }
    Ok(all.into_iter().filter(|(k, _)| keep.contains(&k.as_str())).collect())
}

fn summarise_run(table: &ResultsTable) {
    let failed = table.failures().count();
    eprintln!("{} rows, {failed} failed", table.rows.len());
    for r in table.failures() {
        eprintln!("  {} {} run {}: {}", r.cell, r.label(), r.run, r.error);
    }
}
