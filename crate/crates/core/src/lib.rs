//! Autoregressive predictive coding for sparse, class-imbalanced time series.
//!
//! The crate is organised bottom-up:
//!
//! * [`numcore`]: tensors, a reverse-mode tape, Adam.
//! * [`datagen`]: the two-variable synthetic benchmark.
//! * [`ingest`]: dataset container, file format, statistics, splits.
//! * [`encoders`]: GRU / GRU-D cells and imputation front-ends.
//! * [`apc`]: forward-prediction pre-training.
//! * [`classify`]: classifier head and the frozen / fine-tuned protocol.
//! * [`metrics`]: AUROC, AUPRC and the F1 family.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apc;
pub mod classify;
pub mod datagen;
pub mod encoders;
mod error;
pub mod ingest;
pub mod metrics;
pub mod numcore;

pub use error::{Error, Result};
pub use numcore::{ParamSet, Tensor};
