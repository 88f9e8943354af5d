use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::cell::{
    decay_vars, decayed_input, gru_recur, gru_vars, hidden_decay, init_decays, init_gru, input_decay,
    project_inputs,
};
use super::view::{InputView, Scheme};
use crate::error::{Error, Result};
use crate::numcore::{BoundParams, Graph, ParamSet, Rng, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    Gru,
    GruD,
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncoderKind::Gru => "gru",
            EncoderKind::GruD => "gru-d",
        })
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gru" => Ok(EncoderKind::Gru),
            "gru-d" | "grud" => Ok(EncoderKind::GruD),
            other => Err(Error::Parameter(format!("unknown encoder '{other}'"))),
        }
    }
}

/// Architecture of a recurrent encoder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub scheme: Scheme,
    pub hidden: usize,
    /// Inverted dropout on the representation fed to the classifier.
    pub dropout: f64,
    /// Per-sequence mask on the hidden-to-hidden input.
    pub recurrent_dropout: f64,
}

impl EncoderConfig {
    pub fn gru(hidden: usize) -> Self {
        Self {
            kind: EncoderKind::Gru,
            scheme: Scheme::Flags,
            hidden,
            dropout: 0.0,
            recurrent_dropout: 0.0,
        }
    }

    pub fn gru_d(hidden: usize) -> Self {
        Self {
            kind: EncoderKind::GruD,
            scheme: Scheme::GruD,
            ..Self::gru(hidden)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            EncoderKind::Gru => self.scheme != Scheme::GruD,
            EncoderKind::GruD => self.scheme == Scheme::GruD,
        };
        if !ok {
            return Err(Error::Config(format!(
                "encoder {} cannot consume the '{}' input scheme",
                self.kind, self.scheme
            )));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden size must be positive".into()));
        }
        for (name, p) in [("dropout", self.dropout), ("recurrent dropout", self.recurrent_dropout)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        Ok(())
    }

    /// Fresh encoder parameters under the `enc.` prefix.
    pub fn init_params(&self, n_vars: usize, rng: &mut Rng) -> Result<ParamSet> {
        self.validate()?;
        let mut p = ParamSet::new();
        init_gru(&mut p, self.scheme.input_width(n_vars), self.hidden, rng);
        if self.kind == EncoderKind::GruD {
            init_decays(&mut p, n_vars, self.hidden, rng);
        }
        Ok(p)
    }
}

/// Time-major mini-batch: row `t * size + b` holds step `t` of member `b`.
/// Members shorter than `steps` are zero-padded with `valid == 0`.
#[derive(Clone, Debug)]
pub struct Batch {
    pub size: usize,
    pub steps: usize,
    pub n_vars: usize,
    pub width: usize,
    pub inputs: Vec<f64>,
    pub values: Vec<f64>,
    pub mask: Vec<f64>,
    pub delta: Vec<f64>,
    pub last: Vec<f64>,
    pub mean: Vec<f64>,
    pub filled: Vec<f64>,
    /// `steps × size`; `None` when every member spans all steps.
    pub valid: Option<Vec<f64>>,
    pub static_features: Vec<f64>,
    pub n_static: usize,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn from_view(view: &InputView, indices: &[usize]) -> Self {
        let size = indices.len();
        let steps = indices.iter().map(|&i| view.samples[i].len).max().unwrap_or(0);
        let (d, w) = (view.n_vars, view.width);
        let rows = steps * size;
        let mut b = Batch {
            size,
            steps,
            n_vars: d,
            width: w,
            inputs: vec![0.0; rows * w],
            values: vec![0.0; rows * d],
            mask: vec![0.0; rows * d],
            delta: vec![0.0; rows * d],
            last: vec![0.0; rows * d],
            mean: vec![0.0; rows * d],
            filled: vec![0.0; rows * d],
            valid: None,
            static_features: Vec::with_capacity(size * view.n_static),
            n_static: view.n_static,
            labels: Vec::with_capacity(size),
        };
        let ragged = indices.iter().any(|&i| view.samples[i].len != steps);
        let mut valid = vec![0.0; if ragged { rows } else { 0 }];
        for (bi, &i) in indices.iter().enumerate() {
            let s = &view.samples[i];
            for t in 0..s.len {
                let row = t * size + bi;
                b.inputs[row * w..(row + 1) * w].copy_from_slice(&s.inputs[t * w..(t + 1) * w]);
                let (dst, src) = (row * d..(row + 1) * d, t * d..(t + 1) * d);
                b.values[dst.clone()].copy_from_slice(&s.values[src.clone()]);
                b.mask[dst.clone()].copy_from_slice(&s.mask[src.clone()]);
                b.delta[dst.clone()].copy_from_slice(&s.delta[src.clone()]);
                b.last[dst.clone()].copy_from_slice(&s.last[src.clone()]);
                b.mean[dst.clone()].copy_from_slice(&s.mean[src.clone()]);
                b.filled[dst].copy_from_slice(&s.filled[src]);
                if ragged {
                    valid[row] = 1.0;
                }
            }
            b.static_features.extend_from_slice(&s.static_features);
            b.labels.push(s.label);
        }
        if ragged {
            b.valid = Some(valid);
        }
        b
    }

    /// Rows `[t0, t1)` of a time-major per-variable array.
    pub fn steps_slice<'a>(&self, arr: &'a [f64], t0: usize, t1: usize) -> &'a [f64] {
        &arr[t0 * self.size * self.n_vars..t1 * self.size * self.n_vars]
    }
}

/// Hidden trajectory of a batch.
#[derive(Clone, Debug)]
pub struct Encoded {
    /// `h_1 .. h_T`, each `size × H`.
    pub states: Vec<Var>,
    /// State at each member's last valid step (zeros for empty members).
    pub last: Var,
}

/// Runs the encoder over a batch with `h_0 = 0`. Recurrent dropout is drawn
/// from `train_rng` when given (training mode) and skipped otherwise.
pub fn encode(
    g: &mut Graph,
    params: &BoundParams,
    config: &EncoderConfig,
    batch: &Batch,
    train_rng: Option<&mut Rng>,
) -> Result<Encoded> {
    let (b, hd, d) = (batch.size, config.hidden, batch.n_vars);
    let w = gru_vars(params, hd)?;
    let mut h = g.constant(Tensor::zeros(&[b, hd]));
    if batch.steps == 0 || b == 0 {
        return Ok(Encoded { states: vec![], last: h });
    }
    let rows = batch.steps * b;

    let drop = match train_rng {
        Some(rng) if config.recurrent_dropout > 0.0 => {
            let keep = 1.0 - config.recurrent_dropout;
            let m: Vec<f64> = (0..b * hd)
                .map(|_| if rng.random_bool(keep) { 1.0 / keep } else { 0.0 })
                .collect();
            Some(g.constant(Tensor::matrix(b, hd, m)?))
        }
        _ => None,
    };

    let (gx_all, gamma_h_all) = match config.kind {
        EncoderKind::Gru => {
            let x = g.constant(Tensor::matrix(rows, batch.width, batch.inputs.clone())?);
            (project_inputs(g, x, &w)?, None)
        }
        EncoderKind::GruD => {
            let dv = decay_vars(params)?;
            let delta = g.constant(Tensor::matrix(rows, d, batch.delta.clone())?);
            let gamma_x = input_decay(g, delta, &dv)?;
            let x_hat = decayed_input(
                g,
                gamma_x,
                &batch.values,
                &batch.mask,
                &batch.last,
                &batch.mean,
                &[rows, d],
            )?;
            let m = g.constant(Tensor::matrix(rows, d, batch.mask.clone())?);
            let gate_in = g.concat_cols(&[x_hat, m])?;
            let gamma_h = hidden_decay(g, delta, &dv)?;
            (project_inputs(g, gate_in, &w)?, Some(gamma_h))
        }
    };

    let mut states = Vec::with_capacity(batch.steps);
    for t in 0..batch.steps {
        let gx = g.slice_rows(gx_all, t * b, b)?;
        let h_prev = match gamma_h_all {
            Some(gh) => {
                let gh_t = g.slice_rows(gh, t * b, b)?;
                g.mul(gh_t, h)?
            }
            None => h,
        };
        let h_new = gru_recur(g, h_prev, gx, &w, drop)?;
        h = match &batch.valid {
            Some(valid) => {
                // Padded steps carry the previous state through unchanged.
                let v = &valid[t * b..(t + 1) * b];
                let keep: Vec<f64> = v.iter().flat_map(|&x| std::iter::repeat_n(x, hd)).collect();
                let keep = g.constant(Tensor::matrix(b, hd, keep)?);
                let diff = g.sub(h_new, h)?;
                let step = g.mul(keep, diff)?;
                g.add(h, step)?
            }
            None => h_new,
        };
        states.push(h);
    }
    Ok(Encoded { states, last: h })
}
