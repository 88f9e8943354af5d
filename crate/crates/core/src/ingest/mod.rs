//! Dataset container, file format, preprocessing and splitting.

mod aggregate;
mod dataset;
mod deltas;
pub mod physionet;
mod resample;
mod split;
mod stats;

pub use aggregate::{aggregate, Event, GriddedSample};
pub use dataset::{Sample, TimeSeriesDataset, FORMAT_VERSION};
pub use deltas::{compute_deltas, sample_deltas};
pub use resample::{resample, resample_indices, Resample};
pub use split::{apportion, split, split_indices, SplitIndices, Splits, DEFAULT_FRACTIONS};
pub use stats::{compute_stats, normalize, NormStats};
