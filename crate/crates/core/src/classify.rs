//! Linear softmax head on the final hidden state, class-weighted
//! cross-entropy, and the scratch / frozen / fine-tuned training protocol.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::encoders::{encode, Batch, EncoderConfig, InputView};
use crate::error::{Error, Result};
use crate::ingest::{resample_indices, Resample};
use crate::metrics::{argmax, auprc, f1_scores};
use crate::numcore::{glorot_uniform, seeded_rng, Adam, AdamConfig, BoundParams, Graph, ParamSet, Rng, Tensor, Var};

pub const HEAD_W: &str = "head.w";
pub const HEAD_B: &str = "head.b";

/// Rows per forward pass when no gradients are needed.
const EVAL_BATCH: usize = 256;

/// Balanced inverse-frequency weights `w_c = N / (K · N_c)`.
pub fn class_weights(labels: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        if l >= n_classes {
            return Err(Error::Parameter(format!("label {l} outside 0..{n_classes}")));
        }
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Parameter(format!("class {c} has no samples")));
    }
    let n = labels.len() as f64;
    Ok(counts
        .iter()
        .map(|&c| n / (n_classes as f64 * c as f64))
        .collect())
}

/// Mean over rows of `-w_y · log softmax(logits)_y`.
pub fn weighted_cross_entropy(g: &mut Graph, logits: Var, labels: &[usize], weights: &[f64]) -> Result<Var> {
    let (rows, k) = match g.shape(logits) {
        [r, c] => (*r, *c),
        other => return Err(Error::dim("weighted_cross_entropy", other, &[labels.len(), weights.len()])),
    };
    if rows != labels.len() || k != weights.len() {
        return Err(Error::dim(
            "weighted_cross_entropy",
            &[rows, k],
            &[labels.len(), weights.len()],
        ));
    }
    let mut pick = vec![0.0; rows * k];
    for (r, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::Parameter(format!("label {y} outside 0..{k}")));
        }
        pick[r * k + y] = -weights[y] / rows as f64;
    }
    let pick = g.constant(Tensor::matrix(rows, k, pick)?);
    let logp = g.log_softmax_rows(logits);
    g.masked_sum(logp, pick)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    /// Random encoder, trained end to end.
    Scratch,
    /// Pre-trained encoder held fixed; only the head learns.
    Frozen,
    /// Frozen stage, then end-to-end training from its best checkpoint.
    FineTuned,
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainMode::Scratch => "scratch",
            TrainMode::Frozen => "frozen",
            TrainMode::FineTuned => "fine-tuned",
        })
    }
}

impl FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scratch" => Ok(TrainMode::Scratch),
            "frozen" => Ok(TrainMode::Frozen),
            "fine-tuned" | "fine_tuned" | "finetuned" => Ok(TrainMode::FineTuned),
            other => Err(Error::Parameter(format!("unknown training mode '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Imbalance {
    None,
    ClassWeights,
    Oversample,
    Undersample,
    /// Oversample the minority to this fraction, then weight by the
    /// resampled frequencies.
    OversampleWeighted(f64),
}

impl Imbalance {
    fn resample(self) -> Option<Resample> {
        match self {
            Imbalance::Oversample => Some(Resample::Oversample),
            Imbalance::Undersample => Some(Resample::Undersample),
            Imbalance::OversampleWeighted(f) => Some(Resample::OversampleTo(f)),
            Imbalance::None | Imbalance::ClassWeights => None,
        }
    }

    fn weighted(self) -> bool {
        matches!(self, Imbalance::ClassWeights | Imbalance::OversampleWeighted(_))
    }
}

impl fmt::Display for Imbalance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Imbalance::None => f.write_str("none"),
            Imbalance::ClassWeights => f.write_str("cw"),
            Imbalance::Oversample => f.write_str("os"),
            Imbalance::Undersample => f.write_str("us"),
            Imbalance::OversampleWeighted(x) => write!(f, "os-cw:{x}"),
        }
    }
}

impl FromStr for Imbalance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "none" => Ok(Imbalance::None),
            "cw" => Ok(Imbalance::ClassWeights),
            "os" => Ok(Imbalance::Oversample),
            "us" => Ok(Imbalance::Undersample),
            _ => match s.strip_prefix("os-cw:") {
                Some(f) => f
                    .parse::<f64>()
                    .ok()
                    .filter(|f| *f > 0.0 && *f < 1.0)
                    .map(Imbalance::OversampleWeighted)
                    .ok_or_else(|| Error::Parameter(format!("bad oversampling fraction in '{s}'"))),
                None => Err(Error::Parameter(format!("unknown imbalance method '{s}'"))),
            },
        }
    }
}

impl Serialize for Imbalance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Imbalance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub learning_rate: f64,
    pub epochs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainPlan {
    pub mode: TrainMode,
    pub imbalance: Imbalance,
    pub batch_size: usize,
    /// Head-only stage (frozen and fine-tuned modes).
    pub head: Stage,
    /// End-to-end stage (scratch, and the last stage of fine-tuning).
    pub end_to_end: Stage,
}

impl TrainPlan {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        for st in [self.head, self.end_to_end] {
            if !(st.learning_rate > 0.0) {
                return Err(Error::Config(format!("learning rate must be positive, got {}", st.learning_rate)));
            }
        }
        Ok(())
    }
}

/// Encoder plus head, with everything needed to run it on a view.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub encoder: EncoderConfig,
    pub n_vars: usize,
    pub n_static: usize,
    pub n_classes: usize,
    pub params: ParamSet,
}

pub fn init_head(params: &mut ParamSet, hidden: usize, n_static: usize, n_classes: usize, rng: &mut Rng) {
    params.insert(HEAD_W, glorot_uniform(hidden + n_static, n_classes, rng));
    params.insert(HEAD_B, Tensor::zeros(&[n_classes]));
}

/// Logits from representations `rep` (`B × H`) and static features.
pub fn head_logits(g: &mut Graph, params: &BoundParams, rep: Var, static_features: &[f64], n_static: usize) -> Result<Var> {
    let input = if n_static > 0 {
        let rows = g.shape(rep)[0];
        let s = g.constant(Tensor::matrix(rows, n_static, static_features.to_vec())?);
        g.concat_cols(&[rep, s])?
    } else {
        rep
    };
    let w = params.var(HEAD_W)?;
    let b = params.var(HEAD_B)?;
    let z = g.matmul(input, w)?;
    g.add_row(z, b)
}

fn dropout(g: &mut Graph, x: Var, p: f64, rng: Option<&mut Rng>) -> Result<Var> {
    match rng {
        Some(rng) if p > 0.0 => {
            let shape = g.shape(x).to_vec();
            let keep = 1.0 - p;
            let n = shape.iter().product();
            let m: Vec<f64> = (0..n).map(|_| if rng.random_bool(keep) { 1.0 / keep } else { 0.0 }).collect();
            let m = g.constant(Tensor::new(shape, m)?);
            g.mul(x, m)
        }
        _ => Ok(x),
    }
}

impl Model {
    /// Fresh encoder and head.
    pub fn random(encoder: EncoderConfig, view: &InputView, rng: &mut Rng) -> Result<Self> {
        let mut params = encoder.init_params(view.n_vars, rng)?;
        init_head(&mut params, encoder.hidden, view.n_static, view.n_classes, rng);
        Ok(Self {
            encoder,
            n_vars: view.n_vars,
            n_static: view.n_static,
            n_classes: view.n_classes,
            params,
        })
    }

    /// Pre-trained `enc.*` weights with a fresh head.
    pub fn from_pretrained(encoder: EncoderConfig, pretrained: &ParamSet, view: &InputView, rng: &mut Rng) -> Result<Self> {
        let fresh = encoder.init_params(view.n_vars, &mut seeded_rng(0))?;
        let mut params = pretrained.with_prefix("enc.");
        for (name, t) in fresh.iter() {
            let got = params
                .get(name)
                .ok_or_else(|| Error::Config(format!("pre-trained weights lack '{name}'")))?;
            if got.shape() != t.shape() {
                return Err(Error::dim("from_pretrained", got.shape(), t.shape()));
            }
        }
        init_head(&mut params, encoder.hidden, view.n_static, view.n_classes, rng);
        Ok(Self {
            encoder,
            n_vars: view.n_vars,
            n_static: view.n_static,
            n_classes: view.n_classes,
            params,
        })
    }

    fn check_view(&self, view: &InputView) -> Result<()> {
        if view.scheme != self.encoder.scheme || view.n_vars != self.n_vars || view.n_static != self.n_static {
            return Err(Error::Config(format!(
                "model expects '{}' views of {} variables and {} static features",
                self.encoder.scheme, self.n_vars, self.n_static
            )));
        }
        Ok(())
    }

    /// Logits for a batch. Dropout and recurrent dropout are active only
    /// when `train_rng` is given.
    pub fn logits(&self, g: &mut Graph, params: &BoundParams, batch: &Batch, mut train_rng: Option<&mut Rng>) -> Result<Var> {
        let enc = encode(g, params, &self.encoder, batch, train_rng.as_deref_mut())?;
        let rep = dropout(g, enc.last, self.encoder.dropout, train_rng)?;
        head_logits(g, params, rep, &batch.static_features, self.n_static)
    }

    /// Final hidden states of every sample, `N × H` row-major.
    pub fn representations(&self, view: &InputView) -> Result<Vec<f64>> {
        self.check_view(view)?;
        let mut out = Vec::with_capacity(view.len() * self.encoder.hidden);
        let idx: Vec<usize> = (0..view.len()).collect();
        for chunk in idx.chunks(EVAL_BATCH) {
            let batch = Batch::from_view(view, chunk);
            let mut g = Graph::new();
            let bound = self.params.bind(&mut g, |_| false);
            let enc = encode(&mut g, &bound, &self.encoder, &batch, None)?;
            out.extend_from_slice(g.value(enc.last).data());
        }
        Ok(out)
    }

    /// Class probabilities per sample; rows sum to one.
    pub fn predict(&self, view: &InputView) -> Result<Vec<Vec<f64>>> {
        self.check_view(view)?;
        let idx: Vec<usize> = (0..view.len()).collect();
        let mut out = Vec::with_capacity(view.len());
        for chunk in idx.chunks(EVAL_BATCH) {
            let batch = Batch::from_view(view, chunk);
            let mut g = Graph::new();
            let bound = self.params.bind(&mut g, |_| false);
            let z = self.logits(&mut g, &bound, &batch, None)?;
            let p = g.softmax_rows(z);
            let p = g.value(p);
            out.extend((0..chunk.len()).map(|r| p.row(r).to_vec()));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = serde_json::json!({
            "encoder": self.encoder,
            "n_vars": self.n_vars,
            "n_static": self.n_static,
            "n_classes": self.n_classes,
            "params": serde_json::from_str::<serde_json::Value>(&self.params.to_json()?)?,
        });
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            encoder: EncoderConfig,
            n_vars: usize,
            n_static: usize,
            n_classes: usize,
            params: serde_json::Value,
        }
        let doc: Doc = serde_json::from_str(text)?;
        doc.encoder.validate()?;
        let params = ParamSet::from_json(&doc.params.to_string())?;
        for name in [HEAD_W, HEAD_B] {
            params.require(name)?;
        }
        Ok(Self {
            encoder: doc.encoder,
            n_vars: doc.n_vars,
            n_static: doc.n_static,
            n_classes: doc.n_classes,
            params,
        })
    }
}

/// AUPRC of the positive class (fraction) for two classes, weighted F1
/// (percent) otherwise.
pub fn validation_metric(probs: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<f64> {
    if n_classes == 2 {
        let scores: Vec<f64> = probs.iter().map(|p| p[1]).collect();
        auprc(&scores, labels)
    } else {
        let preds: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
        Ok(f1_scores(&preds, labels, n_classes)?.weighted)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub stage: String,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
}

/// Which checkpoint was returned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub stage: String,
    /// 1-based epoch within its stage.
    pub epoch: usize,
    pub metric: f64,
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub model: Model,
    pub selection: Selection,
    pub history: Vec<EpochRecord>,
}

struct Best {
    params: ParamSet,
    selection: Option<Selection>,
}

impl Best {
    /// Keeps the checkpoint only on strict improvement, so ties go to the
    /// earliest epoch.
    fn offer(&mut self, params: &ParamSet, stage: &str, epoch: usize, metric: f64) {
        if self.selection.as_ref().is_none_or(|s| metric > s.metric) {
            self.params = params.clone();
            self.selection = Some(Selection {
                stage: stage.into(),
                epoch,
                metric,
            });
        }
    }
}

/// Trains a classifier on `train`, selecting the checkpoint with the best
/// validation metric. Resampling and class weights only ever see `train`.
pub fn train_classifier(
    pretrained: Option<&ParamSet>,
    encoder: &EncoderConfig,
    train: &InputView,
    val: &InputView,
    plan: &TrainPlan,
    seed: u64,
) -> Result<Trained> {
    encoder.validate()?;
    plan.validate()?;
    let mut rng = seeded_rng(seed);
    let mut model = match (plan.mode, pretrained) {
        (TrainMode::Scratch, _) => Model::random(*encoder, train, &mut rng)?,
        (_, Some(p)) => Model::from_pretrained(*encoder, p, train, &mut rng)?,
        (mode, None) => {
            return Err(Error::Config(format!("{mode} training needs pre-trained encoder weights")));
        }
    };
    model.check_view(train)?;
    model.check_view(val)?;

    let labels = train.labels();
    let order = match plan.imbalance.resample() {
        Some(mode) => resample_indices(&labels, train.n_classes, mode, &mut rng)?,
        None => (0..train.len()).collect(),
    };
    let weights = if plan.imbalance.weighted() {
        let resampled: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
        class_weights(&resampled, train.n_classes)?
    } else {
        vec![1.0; train.n_classes]
    };

    let val_labels = val.labels();
    let mut best = Best {
        params: model.params.clone(),
        selection: None,
    };
    let mut history = Vec::new();

    if plan.mode != TrainMode::Scratch {
        train_head(&mut model, train, val, &order, &weights, plan, &mut rng, &mut best, &mut history)?;
        model.params = best.params.clone();
    }
    if plan.mode != TrainMode::Frozen {
        let stage = if plan.mode == TrainMode::Scratch { "scratch" } else { "fine-tune" };
        let mut adam = Adam::new(AdamConfig::with_lr(plan.end_to_end.learning_rate));
        let mut epoch_order = order.clone();
        for epoch in 1..=plan.end_to_end.epochs {
            epoch_order.shuffle(&mut rng);
            let mut total = 0.0;
            for chunk in epoch_order.chunks(plan.batch_size) {
                let batch = Batch::from_view(train, chunk);
                let mut g = Graph::new();
                let bound = model.params.bind(&mut g, |_| true);
                let z = model.logits(&mut g, &bound, &batch, Some(&mut rng))?;
                let loss = weighted_cross_entropy(&mut g, z, &batch.labels, &weights)?;
                let value = g.value(loss).item();
                if !value.is_finite() {
                    return Err(Error::Numeric(format!("{stage} loss became {value} in epoch {epoch}")));
                }
                total += value * chunk.len() as f64;
                let grads = g.backward(loss)?;
                adam.step(&mut model.params, &bound.gradients(&g, &grads))?;
            }
            let metric = validation_metric(&model.predict(val)?, &val_labels, val.n_classes)?;
            history.push(EpochRecord {
                stage: stage.into(),
                epoch,
                train_loss: total / order.len() as f64,
                val_metric: metric,
            });
            best.offer(&model.params, stage, epoch, metric);
        }
    }

    let selection = best
        .selection
        .ok_or_else(|| Error::Config("training plan has zero epochs".into()))?;
    model.params = best.params;
    Ok(Trained {
        model,
        selection,
        history,
    })
}

/// Head-only stage on cached encoder outputs. The encoder is fixed, so its
/// representations are computed once (without recurrent dropout).
#[allow(clippy::too_many_arguments)]
fn train_head(
    model: &mut Model,
    train: &InputView,
    val: &InputView,
    order: &[usize],
    weights: &[f64],
    plan: &TrainPlan,
    rng: &mut Rng,
    best: &mut Best,
    history: &mut Vec<EpochRecord>,
) -> Result<()> {
    let h = model.encoder.hidden;
    let s = model.n_static;
    let k = model.n_classes;
    let train_rep = model.representations(train)?;
    let val_rep = model.representations(val)?;
    let val_static: Vec<f64> = val.samples.iter().flat_map(|x| x.static_features.iter().copied()).collect();
    let val_labels = val.labels();
    let is_head = |name: &str| name.starts_with("head.");

    let mut adam = Adam::new(AdamConfig::with_lr(plan.head.learning_rate));
    let mut epoch_order = order.to_vec();
    for epoch in 1..=plan.head.epochs {
        epoch_order.shuffle(rng);
        let mut total = 0.0;
        for chunk in epoch_order.chunks(plan.batch_size) {
            let rep: Vec<f64> = chunk.iter().flat_map(|&i| train_rep[i * h..(i + 1) * h].iter().copied()).collect();
            let st: Vec<f64> = chunk.iter().flat_map(|&i| train.samples[i].static_features.iter().copied()).collect();
            let y: Vec<usize> = chunk.iter().map(|&i| train.samples[i].label).collect();
            let mut g = Graph::new();
            let bound = model.params.bind(&mut g, is_head);
            let rep = g.constant(Tensor::matrix(chunk.len(), h, rep)?);
            let rep = dropout(&mut g, rep, model.encoder.dropout, Some(&mut *rng))?;
            let z = head_logits(&mut g, &bound, rep, &st, s)?;
            let loss = weighted_cross_entropy(&mut g, z, &y, weights)?;
            let value = g.value(loss).item();
            if !value.is_finite() {
                return Err(Error::Numeric(format!("head loss became {value} in epoch {epoch}")));
            }
            total += value * chunk.len() as f64;
            let grads = g.backward(loss)?;
            adam.step(&mut model.params, &bound.gradients(&g, &grads))?;
        }

        let mut g = Graph::new();
        let bound = model.params.bind(&mut g, |_| false);
        let rep = g.constant(Tensor::matrix(val.len(), h, val_rep.clone())?);
        let z = head_logits(&mut g, &bound, rep, &val_static, s)?;
        let p = g.softmax_rows(z);
        let p = g.value(p);
        let probs: Vec<Vec<f64>> = (0..val.len()).map(|r| p.row(r).to_vec()).collect();
        debug_assert!(probs.iter().all(|r| r.len() == k));
        let metric = validation_metric(&probs, &val_labels, k)?;
        history.push(EpochRecord {
            stage: "frozen".into(),
            epoch,
            train_loss: total / order.len() as f64,
            val_metric: metric,
        });
        best.offer(&model.params, "frozen", epoch, metric);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_weight_examples() {
        assert_eq!(class_weights(&[0, 1, 0, 1], 2).unwrap(), vec![1.0, 1.0]);
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 86)).collect();
        let w = class_weights(&labels, 2).unwrap();
        assert!((w[0] - 100.0 / 172.0).abs() < 1e-12);
        assert!((w[1] - 100.0 / 28.0).abs() < 1e-12);
        assert!((w[0] - 0.5814).abs() < 1e-4 && (w[1] - 3.5714).abs() < 1e-4);
        assert!(class_weights(&[0, 0], 2).is_err());
    }

    fn ce(logits: Vec<f64>, labels: &[usize], w: &[f64]) -> f64 {
        let mut g = Graph::new();
        let k = w.len();
        let z = g.constant(Tensor::matrix(labels.len(), k, logits).unwrap());
        let l = weighted_cross_entropy(&mut g, z, labels, w).unwrap();
        g.value(l).item()
    }

    #[test]
    fn cross_entropy_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!((ce(vec![0.0, 0.0], &[1], &[1.0, 1.0]) - ln2).abs() < 1e-15);
        assert!((ce(vec![0.0, 0.0], &[1], &[1.0, 3.5714]) - 3.5714 * ln2).abs() < 1e-12);
        assert!((3.5714 * ln2 - 2.4755).abs() < 1e-4);
        assert!(ce(vec![-800.0, 800.0], &[1], &[1.0, 1.0]) < 1e-300);
        assert!(ce(vec![800.0, -800.0], &[1], &[1.0, 1.0]).is_finite());
    }

    #[test]
    fn imbalance_parsing() {
        assert_eq!("os-cw:0.12".parse::<Imbalance>().unwrap(), Imbalance::OversampleWeighted(0.12));
        assert_eq!("cw".parse::<Imbalance>().unwrap(), Imbalance::ClassWeights);
        assert!("os-cw:1.5".parse::<Imbalance>().is_err());
        for s in ["none", "cw", "os", "us", "os-cw:0.12"] {
            assert_eq!(s.parse::<Imbalance>().unwrap().to_string(), s);
        }
        assert_eq!("fine-tuned".parse::<TrainMode>().unwrap(), TrainMode::FineTuned);
    }

    #[test]
    fn model_json_round_trip() {
        let view = InputView {
            scheme: crate::encoders::Scheme::Flags,
            n_vars: 2,
            n_static: 1,
            n_classes: 3,
            width: 4,
            samples: vec![],
        };
        let m = Model::random(EncoderConfig::gru(3), &view, &mut seeded_rng(0)).unwrap();
        let back = Model::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.params.require(HEAD_W).unwrap().shape(), &[4, 3]);
    }

    #[test]
    fn best_checkpoint_prefers_earliest_tie() {
        let mut p = ParamSet::new();
        let mut best = Best {
            params: p.clone(),
            selection: None,
        };
        for (epoch, m) in [0.2, 0.7, 0.7, 0.5].into_iter().enumerate() {
            p.insert("x", Tensor::scalar(epoch as f64));
            best.offer(&p, "s", epoch + 1, m);
        }
        assert_eq!(best.selection.unwrap().epoch, 2);
        assert_eq!(best.params.get("x").unwrap().item(), 1.0);
    }
}
