//! Autoregressive predictive coding: train an encoder to predict the input
//! `n` steps ahead of each hidden state through a linear read-out.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoders::{encode, Batch, EncoderConfig, InputView};
use crate::error::{Error, Result};
use crate::numcore::{glorot_uniform, seeded_rng, Adam, AdamConfig, BoundParams, Graph, ParamSet, Rng, Tensor, Var};

/// Name of the hidden-to-variables projection.
pub const PROJECTION: &str = "apc.w";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApcLoss {
    MaskedMse,
    L1,
}

impl fmt::Display for ApcLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApcLoss::MaskedMse => "masked-mse",
            ApcLoss::L1 => "l1",
        })
    }
}

impl FromStr for ApcLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "masked-mse" | "masked_mse" | "mse" => Ok(ApcLoss::MaskedMse),
            "l1" => Ok(ApcLoss::L1),
            other => Err(Error::Parameter(format!("unknown APC loss '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApcConfig {
    pub shift: usize,
    pub loss: ApcLoss,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for ApcConfig {
    fn default() -> Self {
        Self {
            shift: 1,
            loss: ApcLoss::MaskedMse,
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
        }
    }
}

/// Encoder weights (`enc.*`) plus the projection, and the mean training loss
/// of every epoch.
#[derive(Clone, Debug)]
pub struct Pretrained {
    pub params: ParamSet,
    pub losses: Vec<f64>,
}

pub fn init_projection(params: &mut ParamSet, hidden: usize, n_vars: usize, rng: &mut Rng) {
    params.insert(PROJECTION, glorot_uniform(hidden, n_vars, rng));
}

/// Predictions `y_t = W h_t` for `t = 1..T-n`, stacked time-major into a
/// `(T-n)·B × D` matrix. Row `r` pairs with batch row `r + n·B` as target.
pub fn apc_forward(
    g: &mut Graph,
    params: &BoundParams,
    encoder: &EncoderConfig,
    batch: &Batch,
    shift: usize,
    train_rng: Option<&mut Rng>,
) -> Result<Var> {
    if shift >= batch.steps {
        return Err(Error::Config(format!(
            "time shift {shift} leaves no prediction window in {} steps",
            batch.steps
        )));
    }
    let enc = encode(g, params, encoder, batch, train_rng)?;
    let states = g.stack_rows(&enc.states[..batch.steps - shift])?;
    let w = params.var(PROJECTION)?;
    g.matmul(states, w)
}

/// `Σ (x - y)² m / Σ m` over every entry of the window. Entries with `m = 0`
/// never touch the value or the gradient.
pub fn masked_mse(g: &mut Graph, preds: Var, targets: &[f64], mask: &[f64]) -> Result<Var> {
    let denom: f64 = mask.iter().sum();
    if denom <= 0.0 {
        return Err(Error::NoObservedTargets);
    }
    let shape = g.shape(preds).to_vec();
    let t = g.constant(Tensor::new(shape.clone(), targets.to_vec())?);
    let m = g.constant(Tensor::new(shape, mask.to_vec())?);
    let diff = g.sub(t, preds)?;
    let sq = g.square(diff);
    let total = g.masked_sum(sq, m)?;
    Ok(g.scale(total, 1.0 / denom))
}

/// `Σ |x - y|`, optionally restricted to entries with nonzero `weights`.
/// The subgradient at a zero difference is 0.
pub fn l1_loss(g: &mut Graph, preds: Var, targets: &[f64], weights: Option<&[f64]>) -> Result<Var> {
    let shape = g.shape(preds).to_vec();
    let t = g.constant(Tensor::new(shape.clone(), targets.to_vec())?);
    let diff = g.sub(t, preds)?;
    let a = g.abs(diff);
    match weights {
        Some(w) => {
            let w = g.constant(Tensor::new(shape, w.to_vec())?);
            g.masked_sum(a, w)
        }
        None => Ok(g.sum(a)),
    }
}

/// Loss of one batch, plus the weight it carries in the epoch mean
/// (observed-target count for MaskedMSE, predicted entries for L1).
pub fn apc_batch_loss(
    g: &mut Graph,
    params: &BoundParams,
    encoder: &EncoderConfig,
    config: &ApcConfig,
    batch: &Batch,
    train_rng: Option<&mut Rng>,
) -> Result<(Var, f64)> {
    let n = config.shift;
    let preds = apc_forward(g, params, encoder, batch, n, train_rng)?;
    let end = batch.steps;
    match config.loss {
        ApcLoss::MaskedMse => {
            let targets = batch.steps_slice(&batch.values, n, end);
            let mask = batch.steps_slice(&batch.mask, n, end);
            let weight = mask.iter().sum();
            Ok((masked_mse(g, preds, targets, mask)?, weight))
        }
        ApcLoss::L1 => {
            let targets = batch.steps_slice(&batch.filled, n, end);
            let weights = batch.valid.as_ref().map(|v| {
                v[n * batch.size..]
                    .iter()
                    .flat_map(|&x| std::iter::repeat_n(x, batch.n_vars))
                    .collect::<Vec<_>>()
            });
            let weight = match &weights {
                Some(w) => w.iter().sum(),
                None => targets.len() as f64,
            };
            Ok((l1_loss(g, preds, targets, weights.as_deref())?, weight))
        }
    }
}

/// Pre-trains a fresh encoder on `train` with Adam. Batches are reshuffled
/// every epoch from a generator seeded by `seed`; identical inputs give
/// bit-identical weights.
pub fn pretrain(encoder: &EncoderConfig, train: &InputView, config: &ApcConfig, seed: u64) -> Result<Pretrained> {
    encoder.validate()?;
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if train.scheme != encoder.scheme {
        return Err(Error::Config(format!(
            "view built for '{}' but encoder expects '{}'",
            train.scheme, encoder.scheme
        )));
    }
    if let Some(s) = train.samples.iter().find(|s| s.len <= config.shift) {
        return Err(Error::Config(format!(
            "time shift {} needs sequences longer than {} steps (found one of {})",
            config.shift, config.shift, s.len
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut params = encoder.init_params(train.n_vars, &mut rng)?;
    init_projection(&mut params, encoder.hidden, train.n_vars, &mut rng);
    let mut adam = Adam::new(AdamConfig::with_lr(config.learning_rate));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut weight) = (0.0, 0.0);
        for chunk in order.chunks(config.batch_size) {
            let batch = Batch::from_view(train, chunk);
            let mut g = Graph::new();
            let bound = params.bind(&mut g, |_| true);
            let (loss, w) = match apc_batch_loss(&mut g, &bound, encoder, config, &batch, Some(&mut rng)) {
                Err(Error::NoObservedTargets) => continue,
                other => other?,
            };
            let value = g.value(loss).item();
            if !value.is_finite() {
                return Err(Error::Numeric(format!("APC loss became {value}")));
            }
            let grads = g.backward(loss)?;
            adam.step(&mut params, &bound.gradients(&g, &grads))?;
            // MaskedMSE is already a mean; L1 is a sum.
            total += match config.loss {
                ApcLoss::MaskedMse => value * w,
                ApcLoss::L1 => value,
            };
            weight += w;
        }
        if weight == 0.0 {
            return Err(Error::NoObservedTargets);
        }
        losses.push(total / weight);
    }
    Ok(Pretrained { params, losses })
}
