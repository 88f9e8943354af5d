//! Experiment harness around `sparseseq-core`: hyperparameter presets, the
//! synthetic benchmark grid, the time-shift sweep and result reporting.

pub mod config;
pub mod experiment;
pub mod grid;
pub mod report;

pub use config::{Hyper, HyperOverrides, ModelName, Preset};
pub use experiment::{prepare, prepare_cell, run_protocol, score, Cell, Outcome, Prepared, Protocol, Scores};
pub use grid::{run_grid, run_jobs, sweep_shift, DataSpec, GridSpec, Job, SweepSpec, TrainingSpec};
pub use report::{render_plotdata, render_table, Metric, ResultRow, ResultsTable};
