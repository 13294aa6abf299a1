use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::metrics::entropy_from_counts;
use crate::error::{Error, Result};

/// Where a split threshold sits between two neighbouring sorted values `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `(a + b) / 2`.
    #[default]
    ValueMidpoint,
    /// Halfway in rank space: everything up to and including `a` goes left.
    /// Decisions are then unchanged by strictly increasing feature transforms.
    RankMidpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Candidate features drawn per node. `None` means `⌈√d⌉`.
    pub features_per_split: Option<usize>,
    pub threshold_rule: ThresholdRule,
    /// A node splits only if its best gain reaches this many bits. At the
    /// default of zero an impure node may take a zero-gain split, which is
    /// what lets XOR-like structure be learned at all; any positive value
    /// turns zero gain into a stopping rule.
    pub min_gain: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 12,
            min_leaf: 2,
            features_per_split: None,
            threshold_rule: ThresholdRule::ValueMidpoint,
            min_gain: 0.0,
        }
    }
}

impl TreeConfig {
    pub fn features_for(&self, dim: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .clamp(1, dim.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be >= 1".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::InvalidConfig("features_per_split must be >= 1".into()));
        }
        if !(self.min_gain >= 0.0 && self.min_gain.is_finite()) {
            return Err(Error::InvalidConfig("min_gain must be >= 0".into()));
        }
        Ok(())
    }
}

/// Samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Decision {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class_counts: Vec<usize>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                TreeNode::Decision {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
                TreeNode::Leaf { class_counts } => return argmax(class_counts),
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Decision { left, right, .. } => 1 + left.depth().max(right.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Decision { left, right, .. } => left.n_leaves() + right.n_leaves(),
            TreeNode::Leaf { .. } => 1,
        }
    }

    /// Largest feature index referenced by any decision node.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Decision { feature, left, right, .. } => {
                [Some(*feature), left.max_feature(), right.max_feature()].into_iter().flatten().max()
            }
            TreeNode::Leaf { .. } => None,
        }
    }

    pub(crate) fn check(&self, dim: usize, n_classes: usize) -> Result<()> {
        match self {
            TreeNode::Decision {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature >= dim || !threshold.is_finite() {
                    return Err(Error::Parse(format!("bad decision node on feature {feature}")));
                }
                left.check(dim, n_classes)?;
                right.check(dim, n_classes)
            }
            TreeNode::Leaf { class_counts } => {
                if class_counts.len() != n_classes || class_counts.iter().sum::<usize>() == 0 {
                    return Err(Error::Parse("bad leaf counts".into()));
                }
                Ok(())
            }
        }
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub(crate) fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn train_tree(data: &Dataset, config: &TreeConfig, rng_seed: u64) -> Result<TreeNode> {
    let idx: Vec<usize> = (0..data.len()).collect();
    grow_tree(data, config, idx, rng_seed)
}

/// Grow on a given multiset of row indices (bootstrap samples repeat rows).
pub(crate) fn grow_tree(data: &Dataset, config: &TreeConfig, mut idx: Vec<usize>, rng_seed: u64) -> Result<TreeNode> {
    if idx.is_empty() {
        return Err(Error::Empty("training set"));
    }
    config.validate()?;
    let mut rng = crate::seed::rng(crate::seed::stream(rng_seed, b"tree"));
    let mut grower = Grower {
        data,
        config,
        k: config.features_for(data.dim()),
        rng: &mut rng,
        keyed: Vec::with_capacity(idx.len()),
    };
    Ok(grower.grow(&mut idx, 0))
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Grower<'a> {
    data: &'a Dataset,
    config: &'a TreeConfig,
    k: usize,
    rng: &'a mut ChaCha8Rng,
    keyed: Vec<(f64, usize)>,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.data.n_classes()];
        for &i in idx {
            c[self.data.label(i)] += 1;
        }
        c
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> TreeNode {
        let counts = self.counts(idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.config.max_depth || idx.len() < 2 * self.config.min_leaf {
            return TreeNode::Leaf { class_counts: counts };
        }
        let split = match self.best_split(idx, &counts) {
            Some(s) if s.gain >= self.config.min_gain => s,
            _ => return TreeNode::Leaf { class_counts: counts },
        };
        let mut n_left = 0;
        for i in 0..idx.len() {
            if self.data.value(idx[i], split.feature) <= split.threshold {
                idx.swap(i, n_left);
                n_left += 1;
            }
        }
        let (l, r) = idx.split_at_mut(n_left);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        TreeNode::Decision {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn best_split(&mut self, idx: &[usize], counts: &[usize]) -> Option<Split> {
        let d = self.data.dim();
        let mut features = sample(self.rng, d, self.k).into_vec();
        features.sort_unstable();
        let n = idx.len();
        let h_parent = entropy_from_counts(counts);
        let min_leaf = self.config.min_leaf;
        let mut best: Option<Split> = None;
        for f in features {
            self.keyed.clear();
            self.keyed.extend(idx.iter().map(|&i| (self.data.value(i, f), self.data.label(i))));
            self.keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut left = vec![0usize; counts.len()];
            let mut right = counts.to_vec();
            for pos in 0..n - 1 {
                let (v, label) = self.keyed[pos];
                left[label] += 1;
                right[label] -= 1;
                let next = self.keyed[pos + 1].0;
                let n_left = pos + 1;
                if v == next || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let gain = (h_parent
                    - n_left as f64 / n as f64 * entropy_from_counts(&left)
                    - (n - n_left) as f64 / n as f64 * entropy_from_counts(&right))
                    .max(0.0);
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Split {
                        feature: f,
                        threshold: self.threshold(v, next),
                        gain,
                    });
                }
            }
        }
        best
    }

    fn threshold(&self, a: f64, b: f64) -> f64 {
        match self.config.threshold_rule {
            ThresholdRule::RankMidpoint => a,
            ThresholdRule::ValueMidpoint => {
                let mid = a + (b - a) / 2.0;
                if mid < b { mid } else { a }
            }
        }
    }
}
