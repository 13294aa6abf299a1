use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::scene::ModulationKind;

/// Labelled rows of equal dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    n_classes: usize,
    x: Vec<f64>,
    y: Vec<usize>,
}

impl Dataset {
    pub fn new(dim: usize, n_classes: usize) -> Self {
        Dataset {
            dim,
            n_classes,
            x: Vec::new(),
            y: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        let mut d = Dataset::new(dim, n_classes);
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        for (r, &l) in rows.iter().zip(labels) {
            d.push(r, l)?;
        }
        Ok(d)
    }

    /// Labelled feature vectors, classes in [`ModulationKind`] order. Rows
    /// without a label are skipped.
    pub fn from_features(features: &[FeatureVector]) -> Self {
        let mut d = Dataset::new(FeatureVector::DIM, ModulationKind::ALL.len());
        for f in features {
            if let Some(label) = f.label {
                d.x.extend_from_slice(&f.as_array());
                d.y.push(label.index());
            }
        }
        d
    }

    pub fn push(&mut self, row: &[f64], label: usize) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        if label >= self.n_classes {
            return Err(Error::UnknownLabel {
                label,
                n_classes: self.n_classes,
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("feature values must be finite".into()));
        }
        self.x.extend_from_slice(row);
        self.y.push(label);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn value(&self, i: usize, feature: usize) -> f64 {
        self.x[i * self.dim + feature]
    }

    pub fn label(&self, i: usize) -> usize {
        self.y[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &l in &self.y {
            c[l] += 1;
        }
        c
    }

    /// Copy with every row passed through `f`.
    pub fn map_rows(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Dataset> {
        let mut out = Dataset::new(self.dim, self.n_classes);
        for i in 0..self.len() {
            out.push(&f(self.row(i)), self.y[i])?;
        }
        Ok(out)
    }
}

/// Per-feature z-score statistics taken from a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let n = data.len() as f64;
        let mut mean = vec![0.0; data.dim()];
        for i in 0..data.len() {
            for (m, v) in mean.iter_mut().zip(data.row(i)) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; data.dim()];
        for i in 0..data.len() {
            for ((s, v), m) in var.iter_mut().zip(data.row(i)).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let std = var
            .into_iter()
            .map(|v| if v.sqrt() > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        Ok(Normalizer { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}
