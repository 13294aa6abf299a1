use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn counts_of(labels: &[usize]) -> Vec<usize> {
    let n = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0; n];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Shannon entropy in bits of a class-count histogram, with `0·log 0 = 0`.
pub fn entropy_from_counts(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * (1.0 / p).log2()
        })
        .sum()
}

/// Entropy in bits of a label multiset.
pub fn entropy(labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("label multiset"));
    }
    Ok(entropy_from_counts(&counts_of(labels)))
}

/// `H(parent) − Σ |cell|/|parent| · H(cell)`.
///
/// The cells must partition `parent` as multisets.
pub fn information_gain(parent: &[usize], partition: &[&[usize]]) -> Result<f64> {
    let h_parent = entropy(parent)?;
    let mut parent_counts = counts_of(parent);
    let mut weighted = 0.0;
    for cell in partition {
        for &l in cell.iter() {
            match parent_counts.get_mut(l) {
                Some(c) if *c > 0 => *c -= 1,
                _ => return Err(Error::InvalidPartition(format!("label {l} over-represented in cells"))),
            }
        }
        if !cell.is_empty() {
            weighted += cell.len() as f64 / parent.len() as f64 * entropy_from_counts(&counts_of(cell));
        }
    }
    if parent_counts.iter().any(|&c| c != 0) {
        return Err(Error::InvalidPartition("cells do not cover the parent".into()));
    }
    // Clamp rounding noise; the true value is never negative.
    Ok((h_parent - weighted).max(0.0))
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub n_classes: usize,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            n_classes,
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn row_total(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    /// Diagonal over row sum; `None` for classes that never occur in the truth.
    pub fn per_class_rate(&self) -> Vec<Option<f64>> {
        (0..self.n_classes)
            .map(|c| {
                let total = self.row_total(c);
                (total > 0).then(|| self.counts[c][c] as f64 / total as f64)
            })
            .collect()
    }
}

pub fn confusion_matrix(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::new(n_classes);
    for (&t, &p) in truth.iter().zip(pred) {
        for label in [t, p] {
            if label >= n_classes {
                return Err(Error::UnknownLabel { label, n_classes });
            }
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

/// Wilson score interval at 95% for `successes / trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}
