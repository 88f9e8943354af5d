//! Model names, hyperparameter presets and JSON config overrides.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sparseseq_core::apc::{ApcConfig, ApcLoss};
use sparseseq_core::classify::{Imbalance, Stage, TrainMode, TrainPlan};
use sparseseq_core::encoders::{EncoderConfig, EncoderKind, Scheme};

/// A model as named in result tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelName {
    Gru,
    GruD,
    GruApc,
    GruDApc,
    GruMean,
    GruForward,
    GruSimple,
}

impl ModelName {
    pub const ALL: [ModelName; 7] = [
        ModelName::Gru,
        ModelName::GruD,
        ModelName::GruApc,
        ModelName::GruDApc,
        ModelName::GruMean,
        ModelName::GruForward,
        ModelName::GruSimple,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Gru => "gru",
            ModelName::GruD => "gru-d",
            ModelName::GruApc => "gru-apc",
            ModelName::GruDApc => "gru-d-apc",
            ModelName::GruMean => "gru-mean",
            ModelName::GruForward => "gru-forward",
            ModelName::GruSimple => "gru-simple",
        }
    }

    pub fn is_apc(self) -> bool {
        matches!(self, ModelName::GruApc | ModelName::GruDApc)
    }

    pub fn kind(self) -> EncoderKind {
        match self {
            ModelName::GruD | ModelName::GruDApc => EncoderKind::GruD,
            _ => EncoderKind::Gru,
        }
    }

    pub fn scheme(self) -> Scheme {
        match self {
            ModelName::Gru | ModelName::GruApc => Scheme::Flags,
            ModelName::GruD | ModelName::GruDApc => Scheme::GruD,
            ModelName::GruMean => Scheme::Mean,
            ModelName::GruForward => Scheme::Forward,
            ModelName::GruSimple => Scheme::Simple,
        }
    }

    /// Stable small integer used in seed derivation.
    pub fn code(self) -> u64 {
        Self::ALL.iter().position(|&m| m == self).expect("listed") as u64
    }

    /// Row of the hyperparameter table this model draws from.
    fn family(self) -> ModelName {
        match self {
            ModelName::GruMean | ModelName::GruForward | ModelName::GruSimple => ModelName::Gru,
            other => other,
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let s = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .with_context(|| format!("unknown model '{s}'"))
    }
}

impl Serialize for ModelName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ModelName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Synthetic,
    Physionet,
    Clue,
    /// Single-core budget: 32 hidden units, short schedules, and a fine-tuning
    /// rate raised to match them.
    Desk,
}

impl FromStr for Preset {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .with_context(|| format!("unknown preset '{s}'"))
    }
}

/// Hyperparameters of one model. Baselines use `learning_rate`/`epochs`;
/// APC models use the step-wise fields (step 1 = pre-training, steps 2 & 3 =
/// head training and fine-tuning).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub learning_rate: f64,
    pub learning_rate_step1: f64,
    pub learning_rate_step23: f64,
    pub batch_size: usize,
    pub hidden_units: usize,
    pub dropout: f64,
    pub recurrent_dropout: f64,
    pub epochs: usize,
    pub epochs_step1: usize,
    pub epochs_step23: usize,
}

/// Partial [`Hyper`] read from a config file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperOverrides {
    pub learning_rate: Option<f64>,
    pub learning_rate_step1: Option<f64>,
    pub learning_rate_step23: Option<f64>,
    pub batch_size: Option<usize>,
    pub hidden_units: Option<usize>,
    pub dropout: Option<f64>,
    pub recurrent_dropout: Option<f64>,
    pub epochs: Option<usize>,
    pub epochs_step1: Option<usize>,
    pub epochs_step23: Option<usize>,
}

impl HyperOverrides {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[allow(clippy::too_many_arguments)]
const fn row(lr: f64, lr1: f64, lr23: f64, bs: usize, hidden: usize, dropout: f64, rdrop: f64, ep: usize, ep1: usize, ep23: usize) -> Hyper {
    Hyper {
        learning_rate: lr,
        learning_rate_step1: lr1,
        learning_rate_step23: lr23,
        batch_size: bs,
        hidden_units: hidden,
        dropout,
        recurrent_dropout: rdrop,
        epochs: ep,
        epochs_step1: ep1,
        epochs_step23: ep23,
    }
}

impl Hyper {
    pub fn preset(preset: Preset, model: ModelName) -> Self {
        use ModelName::*;
        match (preset, model.family()) {
            (Preset::Synthetic, Gru) => row(1e-3, 1e-3, 1e-4, 32, 64, 0.0, 0.0, 150, 150, 150),
            (Preset::Synthetic, GruD) => row(1e-3, 1e-3, 1e-4, 32, 32, 0.0, 0.0, 100, 100, 100),
            // The published table lists dropout 1.0 here, which would zero the
            // representation; 0.0 is used instead.
            (Preset::Synthetic, GruApc) => row(1e-3, 1e-3, 1e-4, 32, 120, 0.0, 0.0, 100, 100, 100),
            (Preset::Synthetic, _) => row(1e-3, 1e-3, 1e-4, 32, 250, 0.0, 0.0, 100, 100, 100),
            (Preset::Physionet, Gru) => row(1e-3, 1e-3, 1e-4, 32, 64, 0.0, 0.0, 50, 50, 50),
            (Preset::Physionet, GruD) => row(1e-3, 1e-3, 1e-4, 32, 32, 0.1, 0.0, 50, 50, 50),
            (Preset::Physionet, GruApc) => row(1e-3, 1e-3, 1e-4, 32, 64, 0.0, 0.0, 100, 100, 100),
            (Preset::Physionet, _) => row(1e-3, 1e-3, 1e-4, 100, 256, 0.1, 0.0, 100, 100, 50),
            (Preset::Clue, Gru) => row(1e-4, 1e-4, 1e-4, 100, 200, 0.4, 0.1, 200, 200, 200),
            (Preset::Clue, GruD) => row(1e-3, 1e-3, 1e-4, 100, 200, 0.1, 0.0, 200, 200, 200),
            (Preset::Clue, GruApc) => row(1e-4, 1e-4, 1e-4, 100, 200, 0.4, 0.1, 50, 50, 50),
            (Preset::Clue, _) => row(1e-3, 1e-3, 1e-4, 100, 250, 0.1, 0.0, 50, 50, 50),
            (Preset::Desk, _) => row(1e-3, 1e-3, 1e-3, 32, 32, 0.0, 0.0, 30, 20, 20),
        }
    }

    pub fn apply(mut self, o: &HyperOverrides) -> Self {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { self.$f = v; } )* };
        }
        set!(
            learning_rate,
            learning_rate_step1,
            learning_rate_step23,
            batch_size,
            hidden_units,
            dropout,
            recurrent_dropout,
            epochs,
            epochs_step1,
            epochs_step23
        );
        self
    }

    pub fn encoder(&self, model: ModelName) -> anyhow::Result<EncoderConfig> {
        let cfg = EncoderConfig {
            kind: model.kind(),
            scheme: model.scheme(),
            hidden: self.hidden_units,
            dropout: self.dropout,
            recurrent_dropout: self.recurrent_dropout,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apc(&self, shift: usize, loss: ApcLoss) -> ApcConfig {
        ApcConfig {
            shift,
            loss,
            epochs: self.epochs_step1,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate_step1,
        }
    }

    pub fn plan(&self, mode: TrainMode, imbalance: Imbalance) -> anyhow::Result<TrainPlan> {
        let (head, end_to_end) = match mode {
            TrainMode::Scratch => {
                let s = Stage {
                    learning_rate: self.learning_rate,
                    epochs: self.epochs,
                };
                (s, s)
            }
            TrainMode::Frozen | TrainMode::FineTuned => {
                let s = Stage {
                    learning_rate: self.learning_rate_step23,
                    epochs: self.epochs_step23,
                };
                (s, s)
            }
        };
        if self.batch_size == 0 {
            bail!("batch size must be positive");
        }
        Ok(TrainPlan {
            mode,
            imbalance,
            batch_size: self.batch_size,
            head,
            end_to_end,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names_round_trip() {
        for m in ModelName::ALL {
            assert_eq!(m.as_str().parse::<ModelName>().unwrap(), m);
        }
        assert!("lstm".parse::<ModelName>().is_err());
    }

    #[test]
    fn overrides_replace_only_given_fields() {
        let base = Hyper::preset(Preset::Synthetic, ModelName::Gru);
        let o: HyperOverrides = serde_json::from_str(r#"{"hidden_units": 8, "epochs": 2}"#).unwrap();
        let h = base.apply(&o);
        assert_eq!((h.hidden_units, h.epochs), (8, 2));
        assert_eq!(h.learning_rate, base.learning_rate);
        assert!(serde_json::from_str::<HyperOverrides>(r#"{"hiden_units": 8}"#).is_err());
    }

    #[test]
    fn apc_dropout_typo_not_shipped() {
        assert_eq!(Hyper::preset(Preset::Synthetic, ModelName::GruApc).dropout, 0.0);
        assert_eq!(Hyper::preset(Preset::Synthetic, ModelName::GruApc).hidden_units, 120);
    }
}
