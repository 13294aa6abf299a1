use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::tree::argmax;
use crate::error::{Error, Result};

/// Gaussian class-conditionals with independent features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub priors: Vec<f64>,
    /// `[class][feature]`.
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

/// Variances are floored at this fraction of the largest per-feature
/// variance in the training set.
const VAR_SMOOTHING: f64 = 1e-9;

pub fn train_nbc(data: &Dataset) -> Result<NaiveBayesModel> {
    let counts = data.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count < 2 {
            return Err(Error::InsufficientClassSamples {
                class,
                count,
                required: 2,
            });
        }
    }
    let d = data.dim();
    let k = data.n_classes();
    let mut means = vec![vec![0.0; d]; k];
    for i in 0..data.len() {
        let c = data.label(i);
        for (m, v) in means[c].iter_mut().zip(data.row(i)) {
            *m += v;
        }
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= n as f64);
    }
    let mut variances = vec![vec![0.0; d]; k];
    for i in 0..data.len() {
        let c = data.label(i);
        for ((s, v), m) in variances[c].iter_mut().zip(data.row(i)).zip(&means[c]) {
            *s += (v - m).powi(2);
        }
    }
    for (s, &n) in variances.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= n as f64);
    }

    let mut overall = vec![0.0f64; d];
    let total = data.len() as f64;
    let mut grand = vec![0.0; d];
    for i in 0..data.len() {
        for (g, v) in grand.iter_mut().zip(data.row(i)) {
            *g += v / total;
        }
    }
    for i in 0..data.len() {
        for ((o, v), g) in overall.iter_mut().zip(data.row(i)).zip(&grand) {
            *o += (v - g).powi(2) / total;
        }
    }
    let floor = (VAR_SMOOTHING * overall.iter().cloned().fold(0.0, f64::max)).max(f64::MIN_POSITIVE);
    for v in variances.iter_mut().flatten() {
        *v = v.max(floor);
    }

    Ok(NaiveBayesModel {
        priors: counts.iter().map(|&c| c as f64 / total).collect(),
        means,
        variances,
    })
}

impl NaiveBayesModel {
    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, |m| m.len())
    }

    /// Unnormalised log posterior per class.
    pub fn log_posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok((0..self.priors.len())
            .map(|c| {
                self.priors[c].ln()
                    + x.iter()
                        .zip(&self.means[c])
                        .zip(&self.variances[c])
                        .map(|((v, m), s)| -0.5 * (2.0 * std::f64::consts::PI * s).ln() - (v - m).powi(2) / (2.0 * s))
                        .sum::<f64>()
            })
            .collect())
    }

    /// Highest posterior; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.log_posterior(x)?))
    }

    pub(crate) fn check(&self) -> Result<()> {
        let k = self.priors.len();
        let d = self.dim();
        let shapes_ok = self.means.len() == k
            && self.variances.len() == k
            && self.means.iter().chain(&self.variances).all(|r| r.len() == d);
        if !shapes_ok || self.variances.iter().flatten().any(|v| !(*v > 0.0)) {
            return Err(Error::Parse("malformed naive Bayes model".into()));
        }
        Ok(())
    }
}

pub fn predict_nbc(model: &NaiveBayesModel, x: &[f64]) -> Result<usize> {
    model.predict(x)
}
