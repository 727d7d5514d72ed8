//! Regression utilities: dataset splitting, goodness-of-fit metrics, and
//! cross-validated hyper-parameter tuning for the random forest.

mod forest;

pub use forest::{train_forest, ForestHyper, ForestModel, Tree};

use crate::error::{Error, Result};
use crate::network::SystemKind;
use crate::rng;
use crate::sim::Strategy;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One regression row: cluster-level failure counts concatenated with the
/// one-hot recovery-strategy indicator, targeting weighted EOH.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub scenario_id: String,
    pub predictors: Vec<f64>,
    pub target: f64,
}

impl ExperimentRecord {
    pub fn is_well_formed(&self) -> bool {
        self.predictors.iter().all(|v| v.is_finite()) && self.target.is_finite()
    }
}

/// One-hot encoding of a strategy over the canonical strategy order.
pub fn strategy_one_hot(strategy: Strategy) -> Vec<f64> {
    Strategy::ALL
        .iter()
        .map(|s| if *s == strategy { 1.0 } else { 0.0 })
        .collect()
}

/// Uniform random split without replacement; deterministic per seed.
///
/// The train side gets `round(n * fraction)` rows, clamped so neither side
/// is empty.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if n < 2 {
        return Err(Error::EmptyInput(format!(
            "dataset too small to split ({n} rows)"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng::rng(rng::mix_tag(seed, "split")));
    let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let test = indices.split_off(n_train);
    Ok((indices, test))
}

/// Splits records into (train, test).
pub fn split_dataset<T: Clone>(
    records: &[T],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    let (train_idx, test_idx) = split_indices(records.len(), train_fraction, seed)?;
    Ok((
        train_idx.iter().map(|&i| records[i].clone()).collect(),
        test_idx.iter().map(|&i| records[i].clone()).collect(),
    ))
}

/// Coefficient of determination `1 - SSE/SST`.
pub fn r_squared(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::InvalidArgument("y/y_hat length mismatch".into()));
    }
    if y.len() < 2 {
        return Err(Error::InvalidArgument(
            "R^2 needs at least 2 observations".into(),
        ));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if sst < 1e-12 {
        return Err(Error::InvalidArgument(
            "R^2 undefined: target has zero variance".into(),
        ));
    }
    let sse: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(1.0 - sse / sst)
}

/// Root mean square error (mean inside the radical).
pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::InvalidArgument("y/y_hat length mismatch".into()));
    }
    if y.is_empty() {
        return Err(Error::EmptyInput("RMSE of empty input".into()));
    }
    let mse: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.len() as f64;
    Ok(mse.sqrt())
}

/// The default tuning grid: tree count x max depth.
pub fn default_grid() -> Vec<ForestHyper> {
    let mut grid = Vec::new();
    for n_trees in [50, 100, 200] {
        for depth in [4, 8, 16] {
            grid.push(ForestHyper {
                n_trees,
                max_depth: Some(depth),
                ..ForestHyper::default()
            });
        }
    }
    grid
}

/// Cross-validation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best: ForestHyper,
    pub best_score: f64,
    /// Mean validation R^2 per grid entry, in evaluation order.
    pub scores: Vec<(ForestHyper, f64)>,
}

/// K-fold cross-validation over the grid; the winner maximizes mean
/// validation R^2, ties broken toward fewer trees, then shallower depth.
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[f64],
    grid: &[ForestHyper],
    folds: usize,
    seed: u64,
) -> Result<CvOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty tuning grid".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument("folds must be >= 2".into()));
    }
    let n = x.len();
    if n < folds {
        return Err(Error::InvalidArgument(format!(
            "{n} rows cannot fill {folds} folds"
        )));
    }
    if n != y.len() {
        return Err(Error::InvalidArgument("x/y length mismatch".into()));
    }

    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng::rng(rng::mix_tag(seed, "cv")));
    let fold_of = |pos: usize| pos % folds;

    let mut order: Vec<&ForestHyper> = grid.iter().collect();
    order.sort_by_key(|h| h.tuning_order_key());

    let mut scores = Vec::with_capacity(order.len());
    let mut best: Option<(ForestHyper, f64)> = None;
    for hyper in order {
        hyper.validate()?;
        let mut fold_scores = Vec::with_capacity(folds);
        for fold in 0..folds {
            let mut train_x = Vec::new();
            let mut train_y = Vec::new();
            let mut val_x = Vec::new();
            let mut val_y = Vec::new();
            for (pos, &i) in indices.iter().enumerate() {
                if fold_of(pos) == fold {
                    val_x.push(x[i].clone());
                    val_y.push(y[i]);
                } else {
                    train_x.push(x[i].clone());
                    train_y.push(y[i]);
                }
            }
            // fold seed shared across grid entries so duplicate configs
            // score identically
            let model = train_forest(&train_x, &train_y, hyper, rng::mix(seed, fold as u64))?;
            let pred = model.predict(&val_x);
            fold_scores.push(r_squared(&val_y, &pred)?);
        }
        let mean = fold_scores.iter().sum::<f64>() / folds as f64;
        scores.push((hyper.clone(), mean));
        if best.as_ref().map(|(_, s)| mean > *s).unwrap_or(true) {
            best = Some((hyper.clone(), mean));
        }
    }
    let (best, best_score) = best.unwrap();
    Ok(CvOutcome {
        best,
        best_score,
        scores,
    })
}

/// Train/test goodness-of-fit of one fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScores {
    pub train_r2: f64,
    pub test_r2: f64,
    pub train_rmse: f64,
    pub test_rmse: f64,
}

/// A tuned, trained, and scored model.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub model: ForestModel,
    pub scores: ModelScores,
    pub cv: CvOutcome,
}

/// Tunes on the train rows by cross-validation, refits the winner on the
/// full train side, and scores both sides.
pub fn fit_and_score(
    x: &[Vec<f64>],
    y: &[f64],
    train_idx: &[usize],
    test_idx: &[usize],
    grid: &[ForestHyper],
    folds: usize,
    cv_seed: u64,
    forest_seed: u64,
) -> Result<FittedModel> {
    let gather = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            idx.iter().map(|&i| x[i].clone()).collect(),
            idx.iter().map(|&i| y[i]).collect(),
        )
    };
    let (train_x, train_y) = gather(train_idx);
    let (test_x, test_y) = gather(test_idx);
    let cv = cross_validate(&train_x, &train_y, grid, folds, cv_seed)?;
    let model = train_forest(&train_x, &train_y, &cv.best, forest_seed)?;
    let train_pred = model.predict(&train_x);
    let test_pred = model.predict(&test_x);
    let scores = ModelScores {
        train_r2: r_squared(&train_y, &train_pred)?,
        test_r2: r_squared(&test_y, &test_pred)?,
        train_rmse: rmse(&train_y, &train_pred)?,
        test_rmse: rmse(&test_y, &test_pred)?,
    };
    Ok(FittedModel { model, scores, cv })
}

/// Assembles design matrix rows from cluster failure counts plus the
/// strategy one-hot; feature names align with the columns.
pub fn design_row(cluster_counts: &[u32], strategy: Strategy) -> Vec<f64> {
    let mut row: Vec<f64> = cluster_counts.iter().map(|&c| c as f64).collect();
    row.extend(strategy_one_hot(strategy));
    row
}

/// Per-system failure totals (the "single cluster" baseline features) in
/// canonical system order.
pub fn per_system_counts(
    failed_links: &BTreeMap<SystemKind, Vec<String>>,
    failed_nodes: &BTreeMap<SystemKind, Vec<String>>,
) -> Vec<u32> {
    SystemKind::ALL
        .iter()
        .map(|k| {
            (failed_links.get(k).map(Vec::len).unwrap_or(0)
                + failed_nodes.get(k).map(Vec::len).unwrap_or(0)) as u32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes_match_fraction() {
        let rows: Vec<usize> = (0..100).collect();
        let (train, test) = split_dataset(&rows, 0.75, 4).unwrap();
        assert_eq!(train.len(), 75);
        assert_eq!(test.len(), 25);
        let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, rows);
    }

    #[test]
    fn two_rows_split_one_and_one() {
        let rows = vec![10, 20];
        let (train, test) = split_dataset(&rows, 0.5, 0).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(test.len(), 1);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let rows: Vec<usize> = (0..40).collect();
        let a = split_dataset(&rows, 0.75, 9).unwrap();
        let b = split_dataset(&rows, 0.75, 9).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(&rows, 0.75, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bad_split_inputs_are_rejected() {
        let rows = vec![1];
        assert!(split_dataset(&rows, 0.5, 0).is_err());
        let rows = vec![1, 2, 3];
        assert!(split_dataset(&rows, 0.0, 0).is_err());
        assert!(split_dataset(&rows, 1.0, 0).is_err());
    }

    #[test]
    fn r_squared_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        let mean = [2.0, 2.0, 2.0];
        assert_eq!(r_squared(&y, &mean).unwrap(), 0.0);
        let off = [1.0, 2.0, 4.0];
        assert!((r_squared(&y, &off).unwrap() - 0.5).abs() < 1e-12);
        assert!(r_squared(&[5.0, 5.0], &[5.0, 5.0]).is_err());
    }

    #[test]
    fn rmse_examples() {
        let y = [1.0, 2.0];
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        let z = [0.0, 0.0];
        let p = [3.0, 4.0];
        assert!((rmse(&z, &p).unwrap() - (25.0f64 / 2.0).sqrt()).abs() < 1e-12);
        assert!((rmse(&z, &p).unwrap() - 3.5355).abs() < 1e-4);
        assert_eq!(rmse(&[1.0], &[-1.5]).unwrap(), 2.5);
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn one_hot_sums_to_one() {
        for s in Strategy::ALL {
            let hot = strategy_one_hot(s);
            assert_eq!(hot.iter().sum::<f64>(), 1.0);
            assert_eq!(hot.len(), 3);
        }
    }

    fn toy_xy(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = rng::rng(33);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rand::Rng::gen_range(&mut rng, 0.0..10.0)])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        (x, y)
    }

    #[test]
    fn single_config_grid_wins_trivially() {
        let (x, y) = toy_xy(30);
        let grid = vec![ForestHyper {
            n_trees: 10,
            ..ForestHyper::default()
        }];
        let out = cross_validate(&x, &y, &grid, 3, 1).unwrap();
        assert_eq!(out.best, grid[0]);
    }

    #[test]
    fn duplicate_configs_score_identically() {
        let (x, y) = toy_xy(30);
        let config = ForestHyper {
            n_trees: 20,
            ..ForestHyper::default()
        };
        let grid = vec![config.clone(), config];
        let out = cross_validate(&x, &y, &grid, 3, 2).unwrap();
        assert_eq!(out.scores[0].1, out.scores[1].1);
    }

    #[test]
    fn each_row_validates_exactly_once_across_folds() {
        // partition property: fold sizes sum to n and are disjoint by
        // construction (strided indexing)
        let n = 31;
        let folds = 3;
        let mut seen = vec![0usize; n];
        for pos in 0..n {
            let fold = pos % folds;
            assert!(fold < folds);
            seen[pos] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn cv_rejects_bad_inputs() {
        let (x, y) = toy_xy(10);
        assert!(cross_validate(&x, &y, &[], 3, 0).is_err());
        let grid = vec![ForestHyper::default()];
        assert!(cross_validate(&x, &y, &grid, 1, 0).is_err());
        assert!(cross_validate(&x, &y, &grid, 11, 0).is_err());
    }
}
