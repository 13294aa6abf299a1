use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bayes::{train_nbc, NaiveBayesModel};
use super::dataset::{Dataset, Normalizer};
use super::forest::{train_forest, ForestConfig, ForestModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Rf,
    Nbc,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Rf => "rf",
            ClassifierKind::Nbc => "nbc",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" => Ok(ClassifierKind::Rf),
            "nbc" => Ok(ClassifierKind::Nbc),
            other => Err(Error::Parse(format!("unknown classifier {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    RandomForest(ForestModel),
    NaiveBayes(NaiveBayesModel),
}

/// A classifier together with the normalisation it was trained behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    /// Class names in label order.
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
    pub normalizer: Normalizer,
    pub model: ModelBody,
}

impl TrainedModel {
    /// Fit z-score statistics on `data`, then the chosen classifier on the
    /// normalised rows.
    pub fn train(
        data: &Dataset,
        kind: ClassifierKind,
        forest: &ForestConfig,
        seed: u64,
        classes: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if classes.len() != data.n_classes() {
            return Err(Error::DimensionMismatch {
                expected: data.n_classes(),
                got: classes.len(),
            });
        }
        let normalizer = Normalizer::fit(data)?;
        let normed = data.map_rows(|r| normalizer.apply(r))?;
        let model = match kind {
            ClassifierKind::Rf => ModelBody::RandomForest(train_forest(&normed, forest, seed)?),
            ClassifierKind::Nbc => ModelBody::NaiveBayes(train_nbc(&normed)?),
        };
        Ok(TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            classes,
            feature_names,
            normalizer,
            model,
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self.model {
            ModelBody::RandomForest(_) => ClassifierKind::Rf,
            ModelBody::NaiveBayes(_) => ClassifierKind::Nbc,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.normalizer.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.normalizer.mean.len(),
                got: x.len(),
            });
        }
        let z = self.normalizer.apply(x);
        match &self.model {
            ModelBody::RandomForest(f) => f.predict(&z),
            ModelBody::NaiveBayes(b) => b.predict(&z),
        }
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<usize>> {
        (0..data.len()).map(|i| self.predict(data.row(i))).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Parse("model document lacks format_version".into()))?;
        if version != u64::from(MODEL_FORMAT_VERSION) {
            return Err(Error::UnsupportedVersion(version as u32));
        }
        let model: TrainedModel = serde_json::from_value(value)?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        let d = self.normalizer.mean.len();
        if self.normalizer.std.len() != d || self.normalizer.std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Parse("malformed normalizer".into()));
        }
        match &self.model {
            ModelBody::RandomForest(f) => {
                if f.dim != d || f.n_classes != self.classes.len() {
                    return Err(Error::Parse("forest shape disagrees with model header".into()));
                }
                f.check()
            }
            ModelBody::NaiveBayes(b) => {
                if b.dim() != d || b.priors.len() != self.classes.len() {
                    return Err(Error::Parse("naive Bayes shape disagrees with model header".into()));
                }
                b.check()
            }
        }
    }
}
