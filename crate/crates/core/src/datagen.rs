//! Two-variable synthetic benchmark with controlled missingness and class
//! imbalance.
//!
//! Each series carries a noisy cosine `x(t) = 1 + o + cos(2πt/P) + ε` and a
//! Bernoulli channel `b(t) ~ Bernoulli(p)`. The label is positive iff the
//! period is short *and* the Bernoulli rate is high, with both cut-offs set as
//! quantiles so that the positive rate hits a requested target.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ingest::{apportion, Sample, TimeSeriesDataset};
use crate::numcore::{derive_seed, seeded_rng, Rng};

/// `minority:majority` class ratio, e.g. `1:20`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ImbalanceRatio {
    pub minority: u32,
    pub majority: u32,
}

impl ImbalanceRatio {
    pub const fn new(minority: u32, majority: u32) -> Self {
        Self { minority, majority }
    }

    /// Target positive rate `minority / (minority + majority)`.
    pub fn rate(&self) -> f64 {
        self.minority as f64 / (self.minority + self.majority) as f64
    }

    /// Exact `(positives, negatives)` for `n` samples; the rounding remainder
    /// goes to the majority class.
    pub fn quota(&self, n: usize) -> (usize, usize) {
        let pos = n * self.minority as usize / (self.minority + self.majority) as usize;
        (pos, n - pos)
    }
}

impl fmt::Display for ImbalanceRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.minority, self.majority)
    }
}

impl serde::Serialize for ImbalanceRatio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for ImbalanceRatio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for ImbalanceRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("ratio must look like '1:20', got '{s}'"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let minority: u32 = a.trim().parse().map_err(|_| bad())?;
        let majority: u32 = b.trim().parse().map_err(|_| bad())?;
        if minority == 0 || majority == 0 || minority > majority {
            return Err(bad());
        }
        Ok(Self { minority, majority })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticParams {
    pub n_samples: usize,
    pub seq_len: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub noise_std: f64,
    pub missing_rate: f64,
    pub ratio: ImbalanceRatio,
    /// Quantile levels `(q_P, q_p)`; defaults to `(√r, √r)` for target rate `r`.
    pub thresholds: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            seq_len: 100,
            p_min: 5.0,
            p_max: 20.0,
            noise_std: 0.1,
            missing_rate: 0.0,
            ratio: ImbalanceRatio::new(1, 1),
            thresholds: None,
            seed: 0,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.p_min && self.p_min < self.p_max) {
            return Err(Error::Parameter(format!(
                "need 0 < p_min < p_max, got {} and {}",
                self.p_min, self.p_max
            )));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::Parameter(format!(
                "missing rate must lie in [0, 1), got {}",
                self.missing_rate
            )));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::Parameter(format!("noise std must be >= 0, got {}", self.noise_std)));
        }
        if self.seq_len == 0 {
            return Err(Error::Parameter("sequence length must be >= 1".into()));
        }
        if self.ratio.quota(self.n_samples).0 == 0 {
            return Err(Error::Parameter(format!(
                "ratio {} leaves no minority sample among {}",
                self.ratio, self.n_samples
            )));
        }
        Ok(())
    }

    pub fn quantile_levels(&self) -> (f64, f64) {
        self.thresholds.unwrap_or_else(|| {
            let q = self.ratio.rate().sqrt();
            (q, q)
        })
    }
}

/// Per-series latent factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatentFactors {
    pub offset: f64,
    pub period: f64,
    pub prob: f64,
}

impl LatentFactors {
    pub fn sample(p_min: f64, p_max: f64, rng: &mut Rng) -> Self {
        Self {
            offset: rng.random_range(0.0..=1.0),
            period: rng.random_range(p_min..=p_max),
            prob: rng.random_range(0.0..=1.0),
        }
    }
}

/// Noisy cosine and Bernoulli channel over `t = 0..seq_len`.
pub fn gen_series(f: &LatentFactors, seq_len: usize, noise_std: f64, rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(noise_std >= 0.0) {
        return Err(Error::Parameter(format!("noise std must be >= 0, got {noise_std}")));
    }
    let noise = Normal::new(0.0, noise_std)
        .map_err(|_| Error::Parameter(format!("noise std must be finite, got {noise_std}")))?;
    let mut x = Vec::with_capacity(seq_len);
    let mut b = Vec::with_capacity(seq_len);
    for t in 0..seq_len {
        let eps = if noise_std > 0.0 { noise.sample(rng) } else { 0.0 };
        x.push(1.0 + f.offset + (2.0 * std::f64::consts::PI * t as f64 / f.period).cos() + eps);
        b.push(if rng.random_bool(f.prob.clamp(0.0, 1.0)) { 1.0 } else { 0.0 });
    }
    Ok((x, b))
}

/// Positive iff the period is at or below its `q_P` quantile and the
/// Bernoulli rate at or above its `1 − q_p` quantile.
pub fn label(f: &LatentFactors, thresholds: (f64, f64), p_min: f64, p_max: f64) -> usize {
    let (q_period, q_prob) = thresholds;
    let period_cut = p_min + q_period * (p_max - p_min);
    let prob_cut = 1.0 - q_prob;
    usize::from(f.period <= period_cut && f.prob >= prob_cut)
}

/// MCAR missingness over a `T × D` block: every entry is dropped
/// independently with probability `rate`. Dropped values are overwritten
/// with NaN.
pub fn inject_missing(values: &[f64], rate: f64, rng: &mut Rng) -> (Vec<f64>, Vec<bool>) {
    let mut out = values.to_vec();
    let mut mask = vec![true; values.len()];
    if rate > 0.0 {
        for (v, m) in out.iter_mut().zip(mask.iter_mut()) {
            if rng.random_bool(rate) {
                *v = f64::NAN;
                *m = false;
            }
        }
    }
    (out, mask)
}

const DRAW_BUDGET: usize = 1_000_000;

/// Draws factor/label pairs until every class quota is filled.
fn draw_factors(
    quotas: &[usize],
    p_min: f64,
    p_max: f64,
    rng: &mut Rng,
    labeller: impl Fn(&LatentFactors) -> usize,
) -> Result<Vec<(LatentFactors, usize)>> {
    let mut remaining = quotas.to_vec();
    let mut left: usize = quotas.iter().sum();
    let mut kept = Vec::with_capacity(left);
    for _ in 0..DRAW_BUDGET {
        if left == 0 {
            return Ok(kept);
        }
        let f = LatentFactors::sample(p_min, p_max, rng);
        let y = labeller(&f);
        if remaining[y] > 0 {
            remaining[y] -= 1;
            left -= 1;
            kept.push((f, y));
        }
    }
    if left == 0 {
        return Ok(kept);
    }
    Err(Error::Generation(format!(
        "class quotas {quotas:?} not met within {DRAW_BUDGET} draws (still missing {remaining:?})"
    )))
}

fn materialize(params: &SyntheticParams, factors: Vec<(LatentFactors, usize)>, n_classes: usize) -> Result<TimeSeriesDataset> {
    let mut ds = TimeSeriesDataset::new(vec!["x".into(), "b".into()], 0, n_classes);
    for (i, (f, y)) in factors.into_iter().enumerate() {
        let mut series_rng = seeded_rng(derive_seed(params.seed, &[1, i as u64]));
        let (x, b) = gen_series(&f, params.seq_len, params.noise_std, &mut series_rng)?;
        let interleaved: Vec<f64> = x.iter().zip(&b).flat_map(|(&x, &b)| [x, b]).collect();
        let mut miss_rng = seeded_rng(derive_seed(params.seed, &[2, i as u64]));
        let (values, mask) = inject_missing(&interleaved, params.missing_rate, &mut miss_rng);
        ds.push(Sample {
            id: format!("syn-{i:05}"),
            times: (0..params.seq_len).map(|t| t as f64).collect(),
            values,
            mask,
            static_features: vec![],
            label: y,
        })?;
    }
    Ok(ds)
}

/// Builds the benchmark with exact class counts.
pub fn build_benchmark(params: &SyntheticParams) -> Result<TimeSeriesDataset> {
    params.validate()?;
    let (pos, neg) = params.ratio.quota(params.n_samples);
    let thresholds = params.quantile_levels();
    let mut rng = seeded_rng(derive_seed(params.seed, &[0]));
    let factors = draw_factors(&[neg, pos], params.p_min, params.p_max, &mut rng, |f| {
        label(f, thresholds, params.p_min, params.p_max)
    })?;
    materialize(params, factors, 2)
}

/// Multiclass test fixture: the label is the period's bin among
/// `class_fractions.len()` equal-width bins over `[p_min, p_max]`, with
/// class counts apportioned from `class_fractions`. It exists to exercise
/// the weighted-F1 paths and has no counterpart in the binary benchmark.
pub fn build_multiclass_fixture(params: &SyntheticParams, class_fractions: &[f64]) -> Result<TimeSeriesDataset> {
    params.validate()?;
    let k = class_fractions.len();
    if k < 2 {
        return Err(Error::Parameter("need at least two classes".into()));
    }
    let quotas = apportion(params.n_samples, class_fractions);
    let mut rng = seeded_rng(derive_seed(params.seed, &[0]));
    let (lo, hi) = (params.p_min, params.p_max);
    let factors = draw_factors(&quotas, lo, hi, &mut rng, |f| {
        (((f.period - lo) / (hi - lo) * k as f64) as usize).min(k - 1)
    })?;
    materialize(params, factors, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(offset: f64, period: f64, prob: f64) -> LatentFactors {
        LatentFactors { offset, period, prob }
    }

    #[test]
    fn noise_free_values() {
        let mut rng = seeded_rng(0);
        let (x, _) = gen_series(&f(0.0, 10.0, 0.5), 3, 0.0, &mut rng).unwrap();
        assert_eq!(x[0], 2.0);
        let (x, _) = gen_series(&f(0.5, 4.0, 0.5), 3, 0.0, &mut rng).unwrap();
        assert!((x[1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_bernoulli() {
        let mut rng = seeded_rng(0);
        let (_, b) = gen_series(&f(0.0, 10.0, 1.0), 50, 0.1, &mut rng).unwrap();
        assert!(b.iter().all(|&v| v == 1.0));
        let (_, b) = gen_series(&f(0.0, 10.0, 0.0), 50, 0.1, &mut rng).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_noise_rejected() {
        assert!(gen_series(&f(0.0, 10.0, 0.5), 3, -1.0, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn extreme_factors_label() {
        let q = 0.5f64.sqrt();
        assert_eq!(label(&f(0.3, 5.0, 1.0), (q, q), 5.0, 20.0), 1);
        assert_eq!(label(&f(0.3, 20.0, 0.0), (q, q), 5.0, 20.0), 0);
    }

    #[test]
    fn quota_arithmetic() {
        assert_eq!(ImbalanceRatio::new(1, 1).quota(2000), (1000, 1000));
        assert_eq!(ImbalanceRatio::new(1, 20).quota(2000), (95, 1905));
        assert_eq!(ImbalanceRatio::new(3, 7).quota(2000), (600, 1400));
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!("1:20".parse::<ImbalanceRatio>().unwrap(), ImbalanceRatio::new(1, 20));
        assert!("20:1".parse::<ImbalanceRatio>().is_err());
        assert!("1-20".parse::<ImbalanceRatio>().is_err());
    }

    #[test]
    fn no_missingness_keeps_values() {
        let v = [1.0, 2.0, 3.0];
        let (out, mask) = inject_missing(&v, 0.0, &mut seeded_rng(1));
        assert_eq!(out, v);
        assert!(mask.iter().all(|&m| m));
    }

    #[test]
    fn invalid_params() {
        let p = SyntheticParams { missing_rate: 1.0, ..Default::default() };
        assert!(build_benchmark(&p).is_err());
        let p = SyntheticParams { p_min: 20.0, p_max: 5.0, ..Default::default() };
        assert!(build_benchmark(&p).is_err());
        let p = SyntheticParams { n_samples: 10, ratio: ImbalanceRatio::new(1, 20), ..Default::default() };
        assert!(build_benchmark(&p).is_err());
    }

    #[test]
    fn unreachable_quota_is_a_generation_error() {
        let p = SyntheticParams {
            n_samples: 100,
            thresholds: Some((0.0, 0.0)),
            ..Default::default()
        };
        assert!(matches!(build_benchmark(&p), Err(Error::Generation(_))));
    }
}
