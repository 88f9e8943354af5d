use rand::seq::index::sample as sample_without_replacement;
use rand::Rng as _;

use super::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::numcore::Rng;

/// Training-set rebalancing strategy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Resample {
    /// Duplicate every smaller class (with replacement) up to the majority count.
    Oversample,
    /// Draw every larger class down (without replacement) to the minority count.
    Undersample,
    /// Duplicate the non-majority classes until they make up this fraction of
    /// the result, preserving their relative proportions.
    OversampleTo(f64),
}

/// Indices of the resampled training set. Originals come first, in input
/// order per class, followed by any duplicates.
pub fn resample_indices(labels: &[usize], n_classes: usize, mode: Resample, rng: &mut Rng) -> Result<Vec<usize>> {
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::Parameter(format!("class {c} has no training samples")));
    }
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let max = *counts.iter().max().expect("non-empty");
    let min = *counts.iter().min().expect("non-empty");
    let majority = counts.iter().position(|&c| c == max).expect("non-empty");

    let targets: Vec<usize> = match mode {
        Resample::Oversample => vec![max; n_classes],
        Resample::Undersample => vec![min; n_classes],
        Resample::OversampleTo(f) => {
            let minority_total: usize = counts.iter().sum::<usize>() - max;
            let current = minority_total as f64 / (minority_total + max) as f64;
            if !(f > current && f < 1.0) {
                return Err(Error::Parameter(format!(
                    "oversampling fraction {f} must lie in ({current:.4}, 1)"
                )));
            }
            let wanted = (f * max as f64 / (1.0 - f)).ceil() as usize;
            let mut t = counts.clone();
            if n_classes == 2 {
                t[1 - majority] = wanted;
            } else {
                let shares: Vec<f64> = counts
                    .iter()
                    .enumerate()
                    .map(|(c, &n)| if c == majority { 0.0 } else { n as f64 })
                    .collect();
                let alloc = super::split::apportion(wanted, &shares);
                for c in (0..n_classes).filter(|&c| c != majority) {
                    t[c] = alloc[c].max(counts[c]);
                }
            }
            t
        }
    };

    let mut out = Vec::with_capacity(targets.iter().sum());
    let mut extra = Vec::new();
    for (idx, &target) in by_class.iter().zip(&targets) {
        if target >= idx.len() {
            out.extend_from_slice(idx);
            for _ in idx.len()..target {
                extra.push(idx[rng.random_range(0..idx.len())]);
            }
        } else {
            let mut keep: Vec<usize> = sample_without_replacement(rng, idx.len(), target)
                .into_iter()
                .collect();
            keep.sort_unstable();
            out.extend(keep.into_iter().map(|k| idx[k]));
        }
    }
    out.extend(extra);
    Ok(out)
}

pub fn resample(train: &TimeSeriesDataset, mode: Resample, rng: &mut Rng) -> Result<TimeSeriesDataset> {
    let idx = resample_indices(&train.labels(), train.n_classes, mode, rng)?;
    Ok(train.subset(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::seeded_rng;

    fn labels(counts: &[usize]) -> Vec<usize> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect()
    }

    fn count(idx: &[usize], l: &[usize], k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for &i in idx {
            c[l[i]] += 1;
        }
        c
    }

    #[test]
    fn oversample_to_majority() {
        let l = labels(&[100, 10]);
        let idx = resample_indices(&l, 2, Resample::Oversample, &mut seeded_rng(1)).unwrap();
        assert_eq!(count(&idx, &l, 2), vec![100, 100]);
    }

    #[test]
    fn undersample_to_minority() {
        let l = labels(&[100, 10]);
        let idx = resample_indices(&l, 2, Resample::Undersample, &mut seeded_rng(1)).unwrap();
        assert_eq!(count(&idx, &l, 2), vec![10, 10]);
        let mut u = idx.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), idx.len());
    }

    #[test]
    fn oversample_to_fraction() {
        let l = labels(&[1905, 95]);
        let idx = resample_indices(&l, 2, Resample::OversampleTo(0.12), &mut seeded_rng(1)).unwrap();
        assert_eq!(count(&idx, &l, 2), vec![1905, 260]);
    }

    #[test]
    fn invalid_fraction() {
        let l = labels(&[90, 10]);
        for f in [0.05, 0.1, 1.0, 1.5] {
            assert!(resample_indices(&l, 2, Resample::OversampleTo(f), &mut seeded_rng(1)).is_err());
        }
    }

    #[test]
    fn oversample_to_fraction_multiclass_keeps_ratio() {
        let l = labels(&[900, 40, 20, 10]);
        let idx = resample_indices(&l, 4, Resample::OversampleTo(0.2), &mut seeded_rng(3)).unwrap();
        let c = count(&idx, &l, 4);
        assert_eq!(c[0], 900);
        assert_eq!(c[1] + c[2] + c[3], 225);
        assert!(c[1] > c[2] && c[2] > c[3]);
    }
}
