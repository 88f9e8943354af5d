use serde::{Deserialize, Serialize};

use super::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};

/// Normalisation statistics over observed training entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    /// Population std; 1.0 for constant variables.
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
    /// Optional `T × D` means per time position, in raw units.
    pub position_means: Option<Vec<Vec<f64>>>,
    /// Static-feature mean and std (std clamped to 1 when degenerate).
    pub static_mean: Vec<f64>,
    pub static_std: Vec<f64>,
}

pub fn compute_stats(train: &TimeSeriesDataset, per_position: bool) -> Result<NormStats> {
    let d = train.n_vars();
    let mut count = vec![0usize; d];
    let mut sum = vec![0.0; d];
    for s in &train.samples {
        for (i, (&m, &v)) in s.mask.iter().zip(&s.values).enumerate() {
            if m {
                count[i % d] += 1;
                sum[i % d] += v;
            }
        }
    }
    if let Some(v) = count.iter().position(|&c| c == 0) {
        return Err(Error::Stats(format!(
            "variable '{}' is never observed in the training split",
            train.variables[v]
        )));
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    let mut sq = vec![0.0; d];
    for s in &train.samples {
        for (i, (&m, &v)) in s.mask.iter().zip(&s.values).enumerate() {
            if m {
                let dev = v - mean[i % d];
                sq[i % d] += dev * dev;
            }
        }
    }
    let mut std = Vec::with_capacity(d);
    let mut constant = Vec::with_capacity(d);
    for v in 0..d {
        let sd = (sq[v] / count[v] as f64).sqrt();
        let is_const = !(sd > 0.0);
        constant.push(is_const);
        std.push(if is_const { 1.0 } else { sd });
    }

    let position_means = per_position.then(|| {
        let t_max = train.max_len();
        let mut psum = vec![vec![0.0; d]; t_max];
        let mut pcount = vec![vec![0usize; d]; t_max];
        for s in &train.samples {
            for t in 0..s.len() {
                for v in 0..d {
                    if let Some(x) = s.observed(t, v, d) {
                        psum[t][v] += x;
                        pcount[t][v] += 1;
                    }
                }
            }
        }
        (0..t_max)
            .map(|t| {
                (0..d)
                    .map(|v| {
                        if pcount[t][v] > 0 {
                            psum[t][v] / pcount[t][v] as f64
                        } else {
                            mean[v]
                        }
                    })
                    .collect()
            })
            .collect()
    });

    let (static_mean, static_std) = static_moments(train);
    Ok(NormStats {
        mean,
        std,
        constant,
        position_means,
        static_mean,
        static_std,
    })
}

fn static_moments(train: &TimeSeriesDataset) -> (Vec<f64>, Vec<f64>) {
    let s = train.n_static;
    let n = train.len().max(1) as f64;
    let mut mean = vec![0.0; s];
    for x in &train.samples {
        for (m, v) in mean.iter_mut().zip(&x.static_features) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; s];
    for x in &train.samples {
        for ((acc, v), m) in var.iter_mut().zip(&x.static_features).zip(&mean) {
            *acc += (v - m) * (v - m) / n;
        }
    }
    let std = var
        .into_iter()
        .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, std)
}

impl NormStats {
    pub fn n_vars(&self) -> usize {
        self.mean.len()
    }

    /// Empirical mean of variable `d` at position `t` in normalised units.
    /// Zero unless per-position means are present; positions past the end of
    /// the table fall back to the global mean.
    pub fn empirical_mean(&self, t: usize, d: usize) -> f64 {
        match &self.position_means {
            Some(pm) if t < pm.len() => (pm[t][d] - self.mean[d]) / self.std[d],
            _ => 0.0,
        }
    }
}

/// Z-scores observed entries per variable. Masks and unobserved entries are
/// left untouched.
pub fn normalize(dataset: &TimeSeriesDataset, stats: &NormStats) -> TimeSeriesDataset {
    let d = dataset.n_vars();
    let mut out = dataset.clone();
    for s in &mut out.samples {
        for (i, (v, &m)) in s.values.iter_mut().zip(&s.mask).enumerate() {
            if m {
                *v = (*v - stats.mean[i % d]) / stats.std[i % d];
            }
        }
        for (k, v) in s.static_features.iter_mut().enumerate() {
            *v = (*v - stats.static_mean[k]) / stats.static_std[k];
        }
    }
    out
}
