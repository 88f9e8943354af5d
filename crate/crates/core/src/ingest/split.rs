use rand::seq::SliceRandom;

use super::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::numcore::seeded_rng;

/// Train / validation / test partition of sample indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Splits {
    pub train: TimeSeriesDataset,
    pub val: TimeSeriesDataset,
    pub test: TimeSeriesDataset,
    pub indices: SplitIndices,
}

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.6, 0.2, 0.2];

/// Largest-remainder apportionment of `n` items over `fractions`.
/// Ties in the remainder go to the earlier part.
pub fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let total: f64 = fractions.iter().sum();
    let exact: Vec<f64> = fractions.iter().map(|f| f / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Stratified, seeded split. Each class is shuffled and cut by
/// [`apportion`]; indices within each part are returned in ascending order.
pub fn split_indices(labels: &[usize], n_classes: usize, fractions: [f64; 3], seed: u64) -> Result<SplitIndices> {
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = seeded_rng(seed);
    let mut parts = [Vec::new(), Vec::new(), Vec::new()];
    for (c, mut idx) in by_class.into_iter().enumerate() {
        if idx.len() < 3 {
            return Err(Error::Split(format!(
                "class {c} has {} samples; at least 3 are needed",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let counts = apportion(idx.len(), &fractions);
        let mut start = 0;
        for (p, &k) in parts.iter_mut().zip(&counts) {
            p.extend_from_slice(&idx[start..start + k]);
            start += k;
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, val, test] = parts;
    Ok(SplitIndices { train, val, test })
}

pub fn split(dataset: &TimeSeriesDataset, fractions: [f64; 3], seed: u64) -> Result<Splits> {
    let indices = split_indices(&dataset.labels(), dataset.n_classes, fractions, seed)?;
    Ok(Splits {
        train: dataset.subset(&indices.train),
        val: dataset.subset(&indices.val),
        test: dataset.subset(&indices.test),
        indices,
    })
}
