//! Shared fixtures for the benchmarks.

use sparseseq_core::datagen::{build_benchmark, ImbalanceRatio, SyntheticParams};
use sparseseq_core::encoders::{impute_view, InputView, Scheme};
use sparseseq_core::ingest::{compute_stats, normalize};

/// A normalised synthetic cell with `n` sequences of length `t`.
pub fn view(n: usize, t: usize, missing: f64, scheme: Scheme) -> InputView {
    let ds = build_benchmark(&SyntheticParams {
        n_samples: n,
        seq_len: t,
        missing_rate: missing,
        ratio: ImbalanceRatio::new(1, 1),
        seed: 3,
        ..SyntheticParams::default()
    })
    .expect("valid fixture");
    let stats = compute_stats(&ds, false).expect("stats");
    impute_view(&normalize(&ds, &stats), &stats, scheme).expect("view")
}
