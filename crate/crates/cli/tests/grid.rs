use std::collections::HashSet;
use std::path::Path;

use sparseseq_cli::config::{HyperOverrides, ModelName, Preset};
use sparseseq_cli::grid::{run_grid, sweep_shift, DataSpec, GridSpec, SweepSpec, TrainingSpec};
use sparseseq_cli::report::ResultsTable;
use sparseseq_core::classify::TrainMode;
use sparseseq_core::datagen::ImbalanceRatio;

fn tiny_training() -> TrainingSpec {
    let o = HyperOverrides {
        hidden_units: Some(4),
        epochs: Some(2),
        epochs_step1: Some(2),
        epochs_step23: Some(1),
        batch_size: Some(16),
        ..HyperOverrides::default()
    };
    TrainingSpec {
        preset: Preset::Desk,
        hyper: ModelName::ALL.into_iter().map(|m| (m, o)).collect(),
        ..TrainingSpec::default()
    }
}

fn tiny_data() -> DataSpec {
    DataSpec {
        n_samples: 80,
        seq_len: 12,
        noise_std: 0.1,
    }
}

fn tiny_grid(seed: u64) -> GridSpec {
    GridSpec {
        imbalance: vec![ImbalanceRatio::new(1, 1), ImbalanceRatio::new(1, 4)],
        missing: vec![0.0, 0.5],
        models: vec![ModelName::Gru, ModelName::GruDApc],
        runs: 2,
        data: tiny_data(),
        training: tiny_training(),
        ..GridSpec::full(seed)
    }
}

fn line_count(p: &Path) -> usize {
    std::fs::read_to_string(p).unwrap().lines().count()
}

fn assert_same(a: &ResultsTable, b: &ResultsTable) {
    assert_eq!(a.rows.len(), b.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert!(x.same_result(y), "{x:?}\n{y:?}");
    }
}

#[test]
fn full_grid_has_108_runs() {
    let spec = GridSpec::full(0);
    let jobs = spec.jobs();
    let keys: Vec<_> = jobs.iter().flat_map(|j| j.keys()).collect();
    assert_eq!(keys.len(), 108);
    assert_eq!(keys.iter().collect::<HashSet<_>>().len(), 108);
}

#[test]
fn sweep_cardinality() {
    let spec = SweepSpec {
        imbalance: ImbalanceRatio::new(1, 20),
        missing: 0.3,
        model: ModelName::GruApc,
        shifts: vec![0, 1],
        modes: vec![TrainMode::Frozen, TrainMode::FineTuned],
        runs: 3,
        master_seed: 0,
        data: DataSpec::default(),
        training: TrainingSpec::default(),
    };
    let keys: HashSet<_> = spec.jobs().unwrap().iter().flat_map(|j| j.keys()).collect();
    assert_eq!(keys.len(), 12);

    let baseline = SweepSpec { model: ModelName::Gru, ..spec };
    assert!(baseline.jobs().is_err());
}

#[test]
fn grid_runs_resumes_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.csv");
    let spec = tiny_grid(5);
    let first = run_grid(&spec, &out, 2).unwrap();
    assert_eq!(first.rows.len(), 16);
    assert_eq!(first.failures().count(), 0, "{:?}", first.failures().collect::<Vec<_>>());
    for r in &first.rows {
        let auprc = r.auprc.unwrap();
        assert!((0.0..=100.0).contains(&auprc));
    }
    assert_eq!(line_count(&out), 17);

    // Completed rows are never recomputed.
    let again = run_grid(&spec, &out, 2).unwrap();
    assert_eq!(line_count(&out), 17);
    assert_eq!(again, first);

    // Simulate an interruption after five rows; only the rest is recomputed
    // and the result matches the uninterrupted run.
    let text = std::fs::read_to_string(&out).unwrap();
    let kept: Vec<&str> = text.lines().take(6).collect();
    std::fs::write(&out, kept.join("\n") + "\n").unwrap();
    let resumed = run_grid(&spec, &out, 1).unwrap();
    assert_eq!(line_count(&out), 17);
    assert_same(&resumed, &first);

    // A fresh file with the same master seed gives the same table.
    let other = dir.path().join("other.csv");
    assert_same(&run_grid(&spec, &other, 1).unwrap(), &first);

    // A different master seed does not.
    let third = dir.path().join("third.csv");
    let shifted = run_grid(&tiny_grid(6), &third, 2).unwrap();
    assert!(shifted.rows.iter().zip(&first.rows).any(|(a, b)| a.auprc != b.auprc));
}

#[test]
fn oversized_shift_fails_only_its_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let spec = SweepSpec {
        imbalance: ImbalanceRatio::new(1, 4),
        missing: 0.3,
        model: ModelName::GruApc,
        shifts: vec![1, 12],
        modes: vec![TrainMode::Frozen, TrainMode::FineTuned],
        runs: 1,
        master_seed: 2,
        data: tiny_data(),
        training: tiny_training(),
    };
    let table = sweep_shift(&spec, &out, 1).unwrap();
    assert_eq!(table.rows.len(), 4);
    for r in &table.rows {
        if r.shift == 12 {
            assert!(r.error.contains("shift"), "{}", r.error);
            assert!(r.auprc.is_none());
        } else {
            assert!(r.error.is_empty(), "{}", r.error);
        }
    }
    // Failed rows are retried on the next invocation, successes are not.
    let before = line_count(&out);
    sweep_shift(&spec, &out, 1).unwrap();
    assert_eq!(line_count(&out), before + 2);
}
