//! Random-forest regression on CART trees.
//!
//! Trees are grown on bootstrap samples with greedy SSE-minimizing
//! axis-aligned splits; a leaf predicts the mean target of its samples and
//! the forest predicts the mean over trees. Globally constant predictor
//! columns are excluded from split candidates, so adding one never changes
//! the model.

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Random-forest hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestHyper {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Fraction of useful features sampled per split.
    pub mtry_fraction: f64,
    pub bootstrap: bool,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            n_trees: 100,
            max_depth: Some(16),
            min_samples_leaf: 1,
            mtry_fraction: 1.0 / 3.0,
            bootstrap: true,
        }
    }
}

impl ForestHyper {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidArgument("n_trees must be >= 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidArgument("max_depth must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidArgument(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        if !(self.mtry_fraction > 0.0 && self.mtry_fraction <= 1.0) {
            return Err(Error::InvalidArgument(
                "mtry_fraction must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Sort key for tuning tie-breaks: fewer trees, then shallower.
    pub fn tuning_order_key(&self) -> (usize, usize, usize, u64) {
        (
            self.n_trees,
            self.max_depth.unwrap_or(usize::MAX),
            self.min_samples_leaf,
            self.mtry_fraction.to_bits(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// One CART regression tree as a flat node array (root at index 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

/// A trained forest; immutable and thread-safe to predict with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub hyper: ForestHyper,
    pub seed: u64,
    pub n_features: usize,
    pub feature_names: Option<Vec<String>>,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }

    /// Per-tree predictions for one row.
    pub fn tree_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(row)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let model: ForestModel = serde_json::from_str(&text)
            .map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
        if model.format_version != 1 {
            return Err(Error::ModelFormat(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        Ok(model)
    }
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    useful: &'a [usize],
    hyper: &'a ForestHyper,
    rng: rand_chacha::ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

fn sum_and_sq(y: &[f64], idx: &[usize]) -> (f64, f64) {
    let mut s = 0.0;
    let mut s2 = 0.0;
    for &i in idx {
        s += y[i];
        s2 += y[i] * y[i];
    }
    (s, s2)
}

impl<'a> TreeBuilder<'a> {
    fn sample_features(&mut self) -> Vec<usize> {
        let m = ((self.useful.len() as f64 * self.hyper.mtry_fraction).ceil() as usize)
            .clamp(1, self.useful.len());
        if m == self.useful.len() {
            return self.useful.to_vec();
        }
        // partial Fisher-Yates over a copy
        let mut pool = self.useful.to_vec();
        for i in 0..m {
            let j = self.rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(m);
        pool.sort_unstable();
        pool
    }

    fn build(&mut self, indices: &mut Vec<usize>, depth: usize) -> usize {
        let n = indices.len();
        let (sum, sum_sq) = sum_and_sq(self.y, indices);
        let mean = sum / n as f64;
        let sse = (sum_sq - sum * sum / n as f64).max(0.0);

        let depth_reached = self
            .hyper
            .max_depth
            .map(|d| depth >= d)
            .unwrap_or(false);
        if n < 2 * self.hyper.min_samples_leaf || depth_reached || sse <= 1e-12 {
            self.nodes.push(TreeNode::Leaf { value: mean });
            return self.nodes.len() - 1;
        }

        let candidates = self.sample_features();
        let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
        let mut order: Vec<usize> = indices.clone();
        for &f in &candidates {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for split in 1..n {
                let prev = order[split - 1];
                left_sum += self.y[prev];
                left_sq += self.y[prev] * self.y[prev];
                let (xa, xb) = (self.x[prev][f], self.x[order[split]][f]);
                if xa == xb {
                    continue;
                }
                if split < self.hyper.min_samples_leaf
                    || n - split < self.hyper.min_samples_leaf
                {
                    continue;
                }
                let right_sum = sum - left_sum;
                let right_sq = sum_sq - left_sq;
                let left_sse = (left_sq - left_sum * left_sum / split as f64).max(0.0);
                let right_sse =
                    (right_sq - right_sum * right_sum / (n - split) as f64).max(0.0);
                let gain = sse - left_sse - right_sse;
                if best.map(|(g, _, _)| gain > g).unwrap_or(true) {
                    best = Some((gain, f, 0.5 * (xa + xb)));
                }
            }
        }

        match best {
            Some((gain, feature, threshold)) if gain > 1e-12 => {
                let (mut left_idx, mut right_idx): (Vec<usize>, Vec<usize>) = indices
                    .iter()
                    .partition(|&&i| self.x[i][feature] <= threshold);
                let at = self.nodes.len();
                self.nodes.push(TreeNode::Leaf { value: mean }); // placeholder
                let left = self.build(&mut left_idx, depth + 1);
                let right = self.build(&mut right_idx, depth + 1);
                self.nodes[at] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                at
            }
            _ => {
                self.nodes.push(TreeNode::Leaf { value: mean });
                self.nodes.len() - 1
            }
        }
    }
}

/// Trains a forest; deterministic in `(x, y, hyper, seed)`.
pub fn train_forest(
    x: &[Vec<f64>],
    y: &[f64],
    hyper: &ForestHyper,
    seed: u64,
) -> Result<ForestModel> {
    hyper.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyInput("empty training set".into()));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("x/y length mismatch".into()));
    }
    let n_features = x[0].len();
    if x.iter().any(|r| r.len() != n_features) {
        return Err(Error::InvalidArgument("ragged predictor rows".into()));
    }
    if y.iter().any(|v| !v.is_finite()) || x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite training values".into()));
    }

    // Constant columns can never produce SSE gain; drop them from the
    // candidate pool so they do not perturb feature sampling either.
    let useful: Vec<usize> = (0..n_features)
        .filter(|&f| {
            let first = x[0][f];
            x.iter().any(|r| r[f] != first)
        })
        .collect();

    let n = x.len();
    use rayon::prelude::*;
    let trees: Vec<Tree> = (0..hyper.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::rng(rng::mix(seed, t as u64));
            let mut indices: Vec<usize> = if hyper.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut builder = TreeBuilder {
                x,
                y,
                useful: &useful,
                hyper,
                rng,
                nodes: Vec::new(),
            };
            builder.build(&mut indices, 0);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(ForestModel {
        format_version: 1,
        hyper: hyper.clone(),
        seed,
        n_features,
        feature_names: None,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_hyper() -> ForestHyper {
        ForestHyper {
            n_trees: 1,
            max_depth: None,
            min_samples_leaf: 1,
            mtry_fraction: 1.0,
            bootstrap: false,
        }
    }

    #[test]
    fn constant_target_predicts_constant() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![4.5, 4.5, 4.5];
        let model = train_forest(&x, &y, &ForestHyper::default(), 3).unwrap();
        for row in &x {
            assert_eq!(model.predict_row(row), 4.5);
        }
    }

    #[test]
    fn single_unbootstrapped_tree_interpolates_distinct_rows() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 5.0], vec![3.0, 2.0]];
        let y = vec![10.0, -1.0, 7.0, 3.25];
        let model = train_forest(&x, &y, &exact_hyper(), 1).unwrap();
        for (row, target) in x.iter().zip(&y) {
            assert_eq!(model.predict_row(row), *target);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 7) as f64, (i % 3) as f64])
            .collect();
        let y: Vec<f64> = (0..40).map(|i| (i % 5) as f64).collect();
        let a = train_forest(&x, &y, &ForestHyper::default(), 7).unwrap();
        let b = train_forest(&x, &y, &ForestHyper::default(), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forest_prediction_is_mean_of_trees() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * i % 11) as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| (i as f64).sin() * 5.0).collect();
        let model = train_forest(&x, &y, &ForestHyper::default(), 9).unwrap();
        let row = vec![4.0, 5.0];
        let mean: f64 =
            model.tree_predictions(&row).iter().sum::<f64>() / model.trees.len() as f64;
        assert!((model.predict_row(&row) - mean).abs() < 1e-12);
    }

    #[test]
    fn predictions_stay_within_training_target_range() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64).cos(), i as f64]).collect();
        let y: Vec<f64> = (0..50).map(|i| ((i * 13) % 17) as f64 - 5.0).collect();
        let (lo, hi) = (
            y.iter().cloned().fold(f64::INFINITY, f64::min),
            y.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let model = train_forest(&x, &y, &ForestHyper::default(), 2).unwrap();
        for i in 0..100 {
            let row = vec![(i as f64) / 10.0 - 5.0, i as f64];
            let p = model.predict_row(&row);
            assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
        }
    }

    #[test]
    fn constant_column_never_changes_predictions() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 9) as f64, ((i * 5) % 7) as f64])
            .collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 3) % 13) as f64).collect();
        let model_a = train_forest(&x, &y, &ForestHyper::default(), 5).unwrap();
        let padded: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                let mut r2 = r.clone();
                r2.push(42.0);
                r2
            })
            .collect();
        let model_b = train_forest(&padded, &y, &ForestHyper::default(), 5).unwrap();
        for (row, row_padded) in x.iter().zip(&padded) {
            assert_eq!(model_a.predict_row(row), model_b.predict_row(row_padded));
        }
    }

    #[test]
    fn model_persistence_round_trips() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| (i / 3) as f64).collect();
        let model = train_forest(&x, &y, &ForestHyper::default(), 12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let back = ForestModel::load(&path).unwrap();
        assert_eq!(model, back);
    }
}
