//! Audits that nothing fitted during training can see the test split, and
//! that the validation split only ever drives checkpoint selection.

use sparseseq_cli::config::{Hyper, ModelName, Preset};
use sparseseq_cli::experiment::{prepare, prepare_splits};
use sparseseq_core::apc::{pretrain, ApcLoss};
use sparseseq_core::classify::{train_classifier, Imbalance, TrainMode};
use sparseseq_core::datagen::{build_benchmark, ImbalanceRatio, SyntheticParams};
use sparseseq_core::ingest::{split, TimeSeriesDataset, DEFAULT_FRACTIONS};

fn data() -> TimeSeriesDataset {
    build_benchmark(&SyntheticParams {
        n_samples: 120,
        seq_len: 15,
        missing_rate: 0.3,
        ratio: ImbalanceRatio::new(1, 4),
        seed: 21,
        ..SyntheticParams::default()
    })
    .unwrap()
}

/// Scales every observed value and flips every label.
fn scramble(ds: &TimeSeriesDataset) -> TimeSeriesDataset {
    let mut out = ds.clone();
    for s in &mut out.samples {
        for v in s.values.iter_mut().filter(|v| !v.is_nan()) {
            *v = *v * 1000.0 + 7.0;
        }
        s.label = 1 - s.label;
    }
    out
}

/// Datasets hold NaN for gaps, so compare their serialised form.
fn bytes(ds: &TimeSeriesDataset) -> Vec<u8> {
    let mut out = Vec::new();
    ds.write_jsonl(&mut out).unwrap();
    out
}

fn hyper() -> Hyper {
    Hyper {
        hidden_units: 6,
        epochs: 3,
        epochs_step1: 2,
        epochs_step23: 2,
        ..Hyper::preset(Preset::Desk, ModelName::GruApc)
    }
}

#[test]
fn statistics_ignore_validation_and_test() {
    let s = split(&data(), DEFAULT_FRACTIONS, 3).unwrap();
    for per_position in [false, true] {
        let a = prepare_splits(s.train.clone(), s.val.clone(), s.test.clone(), per_position).unwrap();
        let b = prepare_splits(s.train.clone(), scramble(&s.val), scramble(&s.test), per_position).unwrap();
        assert_eq!(a.stats, b.stats);
        assert_eq!(bytes(&a.train), bytes(&b.train));
    }
}

#[test]
fn training_never_reads_the_test_split() {
    let s = split(&data(), DEFAULT_FRACTIONS, 3).unwrap();
    let clean = prepare_splits(s.train.clone(), s.val.clone(), s.test.clone(), false).unwrap();
    let dirty = prepare_splits(s.train, s.val, scramble(&s.test), false).unwrap();
    let h = hyper();
    let enc = h.encoder(ModelName::GruApc).unwrap();
    let (vc, vd) = (clean.views(enc.scheme).unwrap(), dirty.views(enc.scheme).unwrap());

    let pc = pretrain(&enc, &vc.train, &h.apc(1, ApcLoss::MaskedMse), 4).unwrap();
    let pd = pretrain(&enc, &vd.train, &h.apc(1, ApcLoss::MaskedMse), 4).unwrap();
    assert_eq!(pc.params, pd.params);

    for imbalance in [Imbalance::ClassWeights, Imbalance::Oversample, Imbalance::Undersample] {
        let plan = h.plan(TrainMode::FineTuned, imbalance).unwrap();
        let a = train_classifier(Some(&pc.params), &enc, &vc.train, &vc.val, &plan, 8).unwrap();
        let b = train_classifier(Some(&pd.params), &enc, &vd.train, &vd.val, &plan, 8).unwrap();
        assert_eq!(a.model, b.model, "{imbalance}");
        assert_eq!(a.history, b.history);
    }
}

#[test]
fn validation_only_selects_checkpoints() {
    let s = split(&data(), DEFAULT_FRACTIONS, 3).unwrap();
    let clean = prepare_splits(s.train.clone(), s.val.clone(), s.test.clone(), false).unwrap();
    let dirty = prepare_splits(s.train, scramble(&s.val), s.test, false).unwrap();
    let h = hyper();
    let enc = h.encoder(ModelName::Gru).unwrap();
    let (vc, vd) = (clean.views(enc.scheme).unwrap(), dirty.views(enc.scheme).unwrap());
    let plan = h.plan(TrainMode::Scratch, Imbalance::ClassWeights).unwrap();
    let a = train_classifier(None, &enc, &vc.train, &vc.val, &plan, 8).unwrap();
    let b = train_classifier(None, &enc, &vd.train, &vd.val, &plan, 8).unwrap();
    // Same optimisation trajectory, possibly a different checkpoint.
    let losses = |t: &sparseseq_core::classify::Trained| t.history.iter().map(|r| r.train_loss).collect::<Vec<_>>();
    assert_eq!(losses(&a), losses(&b));
}

#[test]
fn split_is_deterministic() {
    let ds = data();
    let a = prepare(&ds, 9, false).unwrap();
    let b = prepare(&ds, 9, false).unwrap();
    assert_eq!(a.stats, b.stats);
    assert_eq!(bytes(&a.test), bytes(&b.test));
}
