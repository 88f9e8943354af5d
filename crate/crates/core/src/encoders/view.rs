use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{sample_deltas, NormStats, TimeSeriesDataset};

/// How missing entries are presented to the encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Zero-filled values next to a 1-if-missing flag (width 2D).
    Flags,
    /// Missing replaced by the empirical mean (width D).
    Mean,
    /// Missing replaced by the last observation, the mean before any (width D).
    Forward,
    /// Mean-filled values, mask and time interval (width 3D).
    Simple,
    /// Raw values plus mask, interval, last observation and mean; imputation
    /// happens inside the GRU-D cell (gate input width 2D).
    GruD,
}

impl Scheme {
    pub fn input_width(self, n_vars: usize) -> usize {
        match self {
            Scheme::Mean | Scheme::Forward => n_vars,
            Scheme::Flags | Scheme::GruD => 2 * n_vars,
            Scheme::Simple => 3 * n_vars,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Flags => "flags",
            Scheme::Mean => "mean",
            Scheme::Forward => "forward",
            Scheme::Simple => "simple",
            Scheme::GruD => "grud",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flags" => Ok(Scheme::Flags),
            "mean" => Ok(Scheme::Mean),
            "forward" => Ok(Scheme::Forward),
            "simple" => Ok(Scheme::Simple),
            "grud" | "gru-d" => Ok(Scheme::GruD),
            other => Err(Error::Parameter(format!("unknown input scheme '{other}'"))),
        }
    }
}

/// Model-ready arrays for one sample. All per-step arrays are `len × D`
/// except `inputs` (`len × width`).
#[derive(Clone, Debug, PartialEq)]
pub struct ViewSample {
    pub len: usize,
    pub inputs: Vec<f64>,
    /// Observed values, 0 where missing.
    pub values: Vec<f64>,
    pub mask: Vec<f64>,
    pub delta: Vec<f64>,
    /// Last observation strictly before each step (`x̃` before the first).
    pub last: Vec<f64>,
    /// Empirical mean `x̃` at each step.
    pub mean: Vec<f64>,
    /// Value channel as imputed by the scheme; reconstruction target for L1.
    pub filled: Vec<f64>,
    pub static_features: Vec<f64>,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputView {
    pub scheme: Scheme,
    pub n_vars: usize,
    pub n_static: usize,
    pub n_classes: usize,
    pub width: usize,
    pub samples: Vec<ViewSample>,
}

impl InputView {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

/// Builds the model inputs for `dataset`, which must already be normalised
/// with `stats` from the training split.
pub fn impute_view(dataset: &TimeSeriesDataset, stats: &NormStats, scheme: Scheme) -> Result<InputView> {
    let d = dataset.n_vars();
    if stats.n_vars() != d {
        return Err(Error::Parameter(format!(
            "stats cover {} variables, dataset has {}",
            stats.n_vars(),
            d
        )));
    }
    let width = scheme.input_width(d);
    let samples = dataset
        .samples
        .iter()
        .map(|s| {
            let len = s.len();
            let n = len * d;
            let delta = sample_deltas(s, d);
            let mask: Vec<f64> = s.mask.iter().map(|&m| f64::from(u8::from(m))).collect();
            let values: Vec<f64> = s
                .values
                .iter()
                .zip(&s.mask)
                .map(|(&v, &m)| if m { v } else { 0.0 })
                .collect();
            let mut mean = vec![0.0; n];
            let mut last = vec![0.0; n];
            let mut forward = vec![0.0; n];
            for v in 0..d {
                let mut carry: Option<f64> = None;
                for t in 0..len {
                    let i = t * d + v;
                    mean[i] = stats.empirical_mean(t, v);
                    last[i] = carry.unwrap_or(mean[i]);
                    if s.mask[i] {
                        carry = Some(values[i]);
                    }
                    forward[i] = carry.unwrap_or(mean[i]);
                }
            }
            let mean_filled: Vec<f64> = (0..n)
                .map(|i| if s.mask[i] { values[i] } else { mean[i] })
                .collect();

            let (inputs, filled) = match scheme {
                Scheme::Flags => {
                    let mut inp = Vec::with_capacity(len * width);
                    for t in 0..len {
                        inp.extend_from_slice(&values[t * d..(t + 1) * d]);
                        inp.extend(mask[t * d..(t + 1) * d].iter().map(|m| 1.0 - m));
                    }
                    (inp, values.clone())
                }
                Scheme::Mean => (mean_filled.clone(), mean_filled.clone()),
                Scheme::Forward => (forward.clone(), forward.clone()),
                Scheme::Simple => {
                    let mut inp = Vec::with_capacity(len * width);
                    for t in 0..len {
                        let r = t * d..(t + 1) * d;
                        inp.extend_from_slice(&mean_filled[r.clone()]);
                        inp.extend_from_slice(&mask[r.clone()]);
                        inp.extend_from_slice(&delta[r]);
                    }
                    (inp, mean_filled.clone())
                }
                Scheme::GruD => {
                    let mut inp = Vec::with_capacity(len * width);
                    for t in 0..len {
                        inp.extend_from_slice(&values[t * d..(t + 1) * d]);
                        inp.extend_from_slice(&mask[t * d..(t + 1) * d]);
                    }
                    (inp, mean_filled.clone())
                }
            };
            ViewSample {
                len,
                inputs,
                values,
                mask,
                delta,
                last,
                mean,
                filled,
                static_features: s.static_features.clone(),
                label: s.label,
            }
        })
        .collect();
    Ok(InputView {
        scheme,
        n_vars: d,
        n_static: dataset.n_static,
        n_classes: dataset.n_classes,
        width,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{compute_stats, Sample};

    fn dataset(values: &[Option<f64>]) -> TimeSeriesDataset {
        let mut ds = TimeSeriesDataset::new(vec!["v".into()], 0, 2);
        ds.push(Sample {
            id: "a".into(),
            times: (0..values.len()).map(|t| t as f64).collect(),
            values: values.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            mask: values.iter().map(Option::is_some).collect(),
            static_features: vec![],
            label: 0,
        })
        .unwrap();
        ds
    }

    fn zero_stats() -> NormStats {
        NormStats {
            mean: vec![0.0],
            std: vec![1.0],
            constant: vec![false],
            position_means: None,
            static_mean: vec![],
            static_std: vec![],
        }
    }

    #[test]
    fn forward_and_mean_fill() {
        let ds = dataset(&[Some(1.2), None, None]);
        let st = zero_stats();
        let fwd = impute_view(&ds, &st, Scheme::Forward).unwrap();
        assert_eq!(fwd.samples[0].inputs, vec![1.2, 1.2, 1.2]);
        let mean = impute_view(&ds, &st, Scheme::Mean).unwrap();
        assert_eq!(mean.samples[0].inputs, vec![1.2, 0.0, 0.0]);
        let flags = impute_view(&ds, &st, Scheme::Flags).unwrap();
        assert_eq!(flags.samples[0].inputs, vec![1.2, 0.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn fully_observed_views_match_raw() {
        let raw = [0.5, -1.0, 2.0];
        let ds = dataset(&raw.map(Some));
        let st = zero_stats();
        for scheme in [Scheme::Mean, Scheme::Forward] {
            assert_eq!(impute_view(&ds, &st, scheme).unwrap().samples[0].inputs, raw);
        }
        let simple = impute_view(&ds, &st, Scheme::Simple).unwrap();
        let vals: Vec<f64> = simple.samples[0].inputs.chunks(3).map(|c| c[0]).collect();
        assert_eq!(vals, raw);
        let flags = impute_view(&ds, &st, Scheme::Flags).unwrap();
        assert!(flags.samples[0].inputs.chunks(2).all(|c| c[1] == 0.0));
    }

    #[test]
    fn forward_uses_mean_before_first_observation() {
        let ds = dataset(&[None, Some(3.0), None]);
        let mut st = compute_stats(&ds, true).unwrap();
        st.position_means = Some(vec![vec![1.0], vec![3.0], vec![2.0]]);
        st.mean = vec![2.0];
        let v = impute_view(&ds, &st, Scheme::Forward).unwrap();
        assert_eq!(v.samples[0].inputs, vec![-1.0, 3.0, 3.0]);
        assert_eq!(v.samples[0].last, vec![-1.0, 1.0, 3.0]);
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("gru-d".parse::<Scheme>().unwrap(), Scheme::GruD);
        assert!("median".parse::<Scheme>().is_err());
    }
}
