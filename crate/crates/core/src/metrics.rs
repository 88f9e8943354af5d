//! Ranking and classification metrics.
//!
//! AUROC and AUPRC are returned as fractions in `[0, 1]`; the F1 family is in
//! percentage points, matching how results are usually tabulated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_binary(scores: &[f64], labels: &[usize]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::MetricUndefined(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(&l) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::MetricUndefined(format!("binary metric got label {l}")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::MetricUndefined("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((pos, labels.len() - pos))
}

/// Indices sorted by descending score; ties keep input order.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auroc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    let (pos, neg) = check_binary(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::MetricUndefined("AUROC needs both classes".into()));
    }
    // Walk tie groups from the top, counting negatives already passed.
    let idx = descending(scores);
    let (mut wins, mut neg_above) = (0.0, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        let (mut p, mut n) = (0usize, 0usize);
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if labels[idx[j]] == 1 {
                p += 1;
            } else {
                n += 1;
            }
            j += 1;
        }
        // Positives in this group beat every negative below it.
        wins += p as f64 * (neg - neg_above - n) as f64 + 0.5 * (p * n) as f64;
        neg_above += n;
        i = j;
    }
    Ok(wins / (pos as f64 * neg as f64))
}

/// Average precision `Σ (R_k - R_{k-1}) P_k` over distinct score thresholds.
pub fn auprc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    let (pos, _) = check_binary(scores, labels)?;
    if pos == 0 {
        return Err(Error::MetricUndefined("AUPRC needs at least one positive".into()));
    }
    let idx = descending(scores);
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        let mut gained = 0usize;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            gained += usize::from(labels[idx[j]] == 1);
            j += 1;
        }
        tp += gained;
        seen = j;
        if gained > 0 {
            ap += (gained as f64 / pos as f64) * (tp as f64 / seen as f64);
        }
        i = j;
    }
    debug_assert_eq!(seen, idx.len());
    Ok(ap)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    /// One-vs-rest F1 per class, in percent.
    pub per_class: Vec<f64>,
    /// Support-weighted mean of `per_class`.
    pub weighted: f64,
    /// Support-weighted mean over every class except the majority.
    pub weighted_minority: f64,
    /// Classes whose F1 had to be defined by convention.
    pub warnings: Vec<String>,
}

/// `K × K` confusion counts, rows = truth, columns = prediction.
pub fn confusion(preds: &[usize], truth: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    if preds.len() != truth.len() {
        return Err(Error::MetricUndefined(format!(
            "{} predictions for {} labels",
            preds.len(),
            truth.len()
        )));
    }
    let mut m = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &t) in preds.iter().zip(truth) {
        if p >= n_classes || t >= n_classes {
            return Err(Error::MetricUndefined(format!("class outside 0..{n_classes}")));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

pub fn f1_scores(preds: &[usize], truth: &[usize], n_classes: usize) -> Result<F1Report> {
    if n_classes < 2 {
        return Err(Error::MetricUndefined("F1 needs at least two classes".into()));
    }
    if truth.is_empty() {
        return Err(Error::MetricUndefined("F1 of an empty evaluation set".into()));
    }
    let m = confusion(preds, truth, n_classes)?;
    let support: Vec<usize> = m.iter().map(|row| row.iter().sum()).collect();
    let mut warnings = Vec::new();
    let per_class: Vec<f64> = (0..n_classes)
        .map(|c| {
            let tp = m[c][c];
            let predicted: usize = m.iter().map(|row| row[c]).sum();
            let denom = support[c] + predicted;
            if denom == 0 {
                warnings.push(format!("class {c} has no true or predicted samples; F1 set to 0"));
                0.0
            } else {
                100.0 * 2.0 * tp as f64 / denom as f64
            }
        })
        .collect();
    let (weighted, weighted_minority) = support_weighted(&per_class, &support);
    if support.iter().filter(|&&c| c > 0).count() < 2 {
        warnings.push("evaluation set has no minority samples; minority F1 set to 0".into());
    }
    Ok(F1Report {
        per_class,
        weighted,
        weighted_minority,
        warnings,
    })
}

/// Support-weighted mean of per-class scores, over all classes and over
/// the non-majority classes. The majority is the class with the largest
/// support, the lowest index winning ties.
pub fn support_weighted(per_class: &[f64], support: &[usize]) -> (f64, f64) {
    let n: usize = support.iter().sum();
    if n == 0 {
        return (0.0, 0.0);
    }
    let weighted = per_class
        .iter()
        .zip(support)
        .map(|(f, &s)| f * s as f64 / n as f64)
        .sum();
    let majority = (0..support.len())
        .max_by(|&a, &b| support[a].cmp(&support[b]).then(b.cmp(&a)))
        .expect("non-empty support");
    let minority_total = n - support[majority];
    let minority = if minority_total == 0 {
        0.0
    } else {
        (0..support.len())
            .filter(|&c| c != majority)
            .map(|c| per_class[c] * support[c] as f64 / minority_total as f64)
            .sum()
    };
    (weighted, minority)
}

/// Index of the largest entry; the first wins ties.
pub fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    Some(Summary {
        mean,
        std: var.sqrt(),
        median,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        n: values.len(),
    })
}

impl Summary {
    /// `"20.0 ± 8.2"`.
    pub fn pm(&self, decimals: usize) -> String {
        format!("{:.*} ± {:.*}", decimals, self.mean, decimals, self.std)
    }
}
