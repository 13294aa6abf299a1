use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::tree::{argmax, grow_tree, TreeConfig, TreeNode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    /// Train each tree on `n` rows drawn with replacement. When off, every
    /// tree sees the full training set.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            tree: TreeConfig::default(),
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
        }
        self.tree.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub config: ForestConfig,
    pub seed: u64,
    pub dim: usize,
    pub n_classes: usize,
    /// Accuracy over rows left out of at least one bootstrap sample.
    pub oob_accuracy: Option<f64>,
}

/// Seed of tree `j` in a forest trained with `rng_seed`.
pub fn tree_seed(rng_seed: u64, j: usize) -> u64 {
    crate::seed::derive(&[rng_seed, j as u64])
}

pub fn train_forest(data: &Dataset, config: &ForestConfig, rng_seed: u64) -> Result<ForestModel> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let n = data.len();
    let grown: Vec<(TreeNode, Vec<bool>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|j| {
            let seed = tree_seed(rng_seed, j);
            let (idx, in_bag) = if config.bootstrap {
                let mut rng = crate::seed::rng(crate::seed::stream(seed, b"bootstrap"));
                let mut in_bag = vec![false; n];
                let idx: Vec<usize> = (0..n)
                    .map(|_| {
                        let i = rng.random_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect();
                (idx, in_bag)
            } else {
                ((0..n).collect(), vec![true; n])
            };
            grow_tree(data, &config.tree, idx, seed).map(|t| (t, in_bag))
        })
        .collect::<Result<_>>()?;

    let oob_accuracy = config.bootstrap.then(|| oob(data, &grown)).flatten();
    Ok(ForestModel {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        config: config.clone(),
        seed: rng_seed,
        dim: data.dim(),
        n_classes: data.n_classes(),
        oob_accuracy,
    })
}

fn oob(data: &Dataset, grown: &[(TreeNode, Vec<bool>)]) -> Option<f64> {
    let mut scored = 0usize;
    let mut correct = 0usize;
    for i in 0..data.len() {
        let mut votes = vec![0usize; data.n_classes()];
        let mut any = false;
        for (tree, in_bag) in grown {
            if !in_bag[i] {
                votes[tree.predict(data.row(i))] += 1;
                any = true;
            }
        }
        if any {
            scored += 1;
            correct += usize::from(argmax(&votes) == data.label(i));
        }
    }
    (scored > 0).then(|| correct as f64 / scored as f64)
}

impl ForestModel {
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Tree votes per class.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        self.check_dim(x)?;
        let mut votes = vec![0; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        Ok(votes)
    }

    /// Majority vote; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.votes(x)?))
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::Parse("forest has no trees".into()));
        }
        for t in &self.trees {
            t.check(self.dim, self.n_classes)?;
        }
        Ok(())
    }
}
