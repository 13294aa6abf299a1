//! Modulation classifiers: an entropy-split random forest and a Gaussian
//! naive Bayes baseline.
//!
//! Class labels are `usize` indices into a caller-fixed ordering, and every
//! argmax breaks ties toward the lowest index. For modulation work the
//! ordering is that of [`ModulationKind::ALL`](crate::scene::ModulationKind::ALL).

mod bayes;
mod dataset;
mod forest;
mod metrics;
mod model;
mod tree;

pub use bayes::{predict_nbc, train_nbc, NaiveBayesModel};
pub use dataset::{Dataset, Normalizer};
pub use forest::{train_forest, tree_seed, ForestConfig, ForestModel};
pub use metrics::{confusion_matrix, entropy, entropy_from_counts, information_gain, wilson_interval, ConfusionMatrix};
pub use model::{ClassifierKind, ModelBody, TrainedModel, MODEL_FORMAT_VERSION};
pub use tree::{train_tree, ThresholdRule, TreeConfig, TreeNode};
