//! Cluster-count selection: the per-system elbow baseline and the
//! iterative search that shifts every system's count by a common offset
//! and picks the knee of the test-R^2 curve.

use crate::cluster::{
    cluster_counts, elbow_k, kmeans, kneedle, ClusterFeatureVector, ComponentKind,
    CurveDirection, CurveShape, ElbowResult, KindClustering, NetworkClustering,
};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::network::SystemKind;
use crate::regress::{
    fit_and_score, strategy_one_hot, FittedModel, ForestHyper, ModelScores,
};
use crate::rng;
use crate::sim::Strategy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Cap on the positive offset range (the raw upper bound can be huge).
    pub max_positive_offset: usize,
    pub kneedle_sensitivity: f64,
    /// Upper end of the per-system elbow scan.
    pub elbow_k_max: usize,
    /// K-means restarts used throughout.
    pub restarts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_positive_offset: 10,
            kneedle_sensitivity: 1.0,
            elbow_k_max: 48,
            restarts: crate::cluster::DEFAULT_RESTARTS,
        }
    }
}

/// Seeds for the randomized stages of the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSeeds {
    pub cluster: u64,
    pub split: u64,
    pub cv: u64,
    pub forest: u64,
}

/// One dataset row as the search consumes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub scenario_id: String,
    pub failed_links: BTreeMap<SystemKind, Vec<String>>,
    pub failed_nodes: BTreeMap<SystemKind, Vec<String>>,
    pub strategy: Strategy,
    pub target: f64,
}

impl DatasetRow {
    pub fn failure_count(&self) -> usize {
        self.failed_links.values().map(Vec::len).sum::<usize>()
            + self.failed_nodes.values().map(Vec::len).sum::<usize>()
    }

    fn failed_ids(&self) -> impl Iterator<Item = &String> {
        self.failed_links
            .values()
            .flatten()
            .chain(self.failed_nodes.values().flatten())
    }
}

/// The feature matrices the search clusters: one component kind per
/// system (links by default, since default hazards fail links only).
#[derive(Debug, Clone)]
pub struct ClusterableSet {
    pub per_system: BTreeMap<SystemKind, (ComponentKind, FeatureMatrix)>,
}

impl ClusterableSet {
    pub fn sizes(&self) -> BTreeMap<SystemKind, usize> {
        self.per_system
            .iter()
            .map(|(k, (_, m))| (*k, m.n_rows()))
            .collect()
    }
}

/// Per-system elbow cluster counts over the clusterable matrices.
///
/// Systems with fewer than four components skip knee detection and use a
/// single cluster.
pub fn elbow_baseline(
    set: &ClusterableSet,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<BTreeMap<SystemKind, ElbowResult>> {
    let mut out = BTreeMap::new();
    for (idx, (kind, (_, matrix))) in set.per_system.iter().enumerate() {
        let result = if matrix.n_rows() < 4 {
            ElbowResult {
                k_star: 1,
                curve: vec![(1, 0.0)],
                warning: if matrix.n_rows() == 1 {
                    None
                } else {
                    Some("too few components for knee detection; using 1 cluster".into())
                },
            }
        } else {
            elbow_k(
                matrix,
                (1, cfg.elbow_k_max),
                rng::mix(seed, idx as u64),
                cfg.restarts,
                cfg.kneedle_sensitivity,
            )?
        };
        out.insert(*kind, result);
    }
    Ok(out)
}

/// Offset bounds around the elbow counts: at most `min(l - 1)` clusters can
/// be removed and `min(size - l)` added uniformly across systems.
pub fn bounds(
    elbow_counts: &BTreeMap<SystemKind, usize>,
    clusterable_sizes: &BTreeMap<SystemKind, usize>,
) -> (usize, usize) {
    let b_minus = elbow_counts
        .values()
        .map(|l| l.saturating_sub(1))
        .min()
        .unwrap_or(0);
    let b_plus = elbow_counts
        .iter()
        .map(|(k, l)| clusterable_sizes.get(k).copied().unwrap_or(*l).saturating_sub(*l))
        .min()
        .unwrap_or(0);
    (b_minus, b_plus)
}

/// One evaluated offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub offset: i64,
    pub counts: BTreeMap<SystemKind, usize>,
    pub total_clusters: usize,
    pub train_r2: f64,
    pub test_r2: f64,
    pub train_rmse: f64,
    pub test_rmse: f64,
}

/// Search result: the full trace plus the chosen model.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub trace: Vec<TraceEntry>,
    pub chosen_index: usize,
    pub chosen_offset: i64,
    pub chosen_counts: BTreeMap<SystemKind, usize>,
    pub chosen_model: FittedModel,
    pub fallback_warning: Option<String>,
}

/// Clusters every system at its count and assembles the design matrix.
pub fn design_for_counts(
    rows: &[DatasetRow],
    set: &ClusterableSet,
    counts: &BTreeMap<SystemKind, usize>,
    cluster_seed: u64,
    restarts: usize,
) -> Result<(NetworkClustering, Vec<Vec<f64>>, Vec<f64>)> {
    let mut per_system = BTreeMap::new();
    for (sys_idx, (kind, (comp_kind, matrix))) in set.per_system.iter().enumerate() {
        let k = *counts.get(kind).ok_or_else(|| {
            Error::InvalidArgument(format!("no cluster count for system `{kind}`"))
        })?;
        let result = kmeans(
            &matrix.rows,
            k,
            rng::mix(cluster_seed, (sys_idx * 1000 + k) as u64),
            restarts,
        )?;
        per_system.insert(
            *kind,
            BTreeMap::from([(*comp_kind, KindClustering::from_kmeans(matrix, &result))]),
        );
    }
    let clustering = NetworkClustering::new(per_system);
    let mut x = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    for row in rows {
        let counts = cluster_counts(row.failed_ids(), &clustering)?;
        let mut predictors: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        predictors.extend(strategy_one_hot(row.strategy));
        x.push(predictors);
        y.push(row.target);
    }
    Ok((clustering, x, y))
}

/// Per-scenario cluster feature vector for export.
pub fn cluster_feature_vector(
    row: &DatasetRow,
    clustering: &NetworkClustering,
) -> Result<ClusterFeatureVector> {
    Ok(ClusterFeatureVector {
        cluster_ids: clustering.cluster_ids(),
        counts: cluster_counts(row.failed_ids(), clustering)?,
    })
}

/// Evaluates every offset in `[-b_minus, min(b_plus, cap)]`, then picks
/// the knee of test R^2 versus total cluster count. Falls back to the
/// best test R^2 (smallest total on ties) when no knee is found.
#[allow(clippy::too_many_arguments)]
pub fn iterative_search(
    rows: &[DatasetRow],
    set: &ClusterableSet,
    elbow_counts: &BTreeMap<SystemKind, usize>,
    cfg: &SearchConfig,
    grid: &[ForestHyper],
    folds: usize,
    train_fraction: f64,
    seeds: SearchSeeds,
) -> Result<SearchOutcome> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("iterative search on empty dataset".into()));
    }
    if set.per_system.is_empty() {
        return Err(Error::InvalidArgument("no clusterable systems".into()));
    }
    for kind in set.per_system.keys() {
        if !elbow_counts.contains_key(kind) {
            return Err(Error::InvalidArgument(format!(
                "missing elbow count for system `{kind}`"
            )));
        }
    }
    let sizes = set.sizes();
    let (b_minus, b_plus_raw) = bounds(elbow_counts, &sizes);
    let b_plus = b_plus_raw.min(cfg.max_positive_offset);
    let offsets: Vec<i64> = (-(b_minus as i64)..=(b_plus as i64)).collect();

    let (train_idx, test_idx) =
        crate::regress::split_indices(rows.len(), train_fraction, seeds.split)?;

    let evaluated: Vec<(TraceEntry, FittedModel)> = offsets
        .par_iter()
        .map(|&offset| -> Result<(TraceEntry, FittedModel)> {
            let counts: BTreeMap<SystemKind, usize> = elbow_counts
                .iter()
                .map(|(k, l)| (*k, (*l as i64 + offset) as usize))
                .collect();
            let (_, x, y) =
                design_for_counts(rows, set, &counts, seeds.cluster, cfg.restarts)?;
            let fitted = fit_and_score(
                &x,
                &y,
                &train_idx,
                &test_idx,
                grid,
                folds,
                seeds.cv,
                seeds.forest,
            )?;
            let total = counts.values().sum();
            Ok((
                TraceEntry {
                    offset,
                    counts,
                    total_clusters: total,
                    train_r2: fitted.scores.train_r2,
                    test_r2: fitted.scores.test_r2,
                    train_rmse: fitted.scores.train_rmse,
                    test_rmse: fitted.scores.test_rmse,
                },
                fitted,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let (trace, models): (Vec<TraceEntry>, Vec<FittedModel>) = evaluated.into_iter().unzip();

    let mut chosen_index = None;
    let mut fallback_warning = None;
    if trace.len() >= 3 {
        let xs: Vec<f64> = trace.iter().map(|t| t.total_clusters as f64).collect();
        let ys: Vec<f64> = trace.iter().map(|t| t.test_r2).collect();
        if let Some(knee) = kneedle(
            &xs,
            &ys,
            cfg.kneedle_sensitivity,
            CurveDirection::Increasing,
            CurveShape::Concave,
        )? {
            chosen_index = Some(knee.index);
        }
    }
    if chosen_index.is_none() {
        // best test R^2; exact ties resolve to the smallest total because
        // the trace is ordered by ascending total cluster count
        let best = trace
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                a.test_r2.total_cmp(&b.test_r2).then(ib.cmp(ia))
            })
            .map(|(i, _)| i)
            .unwrap();
        if trace.len() > 1 {
            fallback_warning = Some(format!(
                "no knee in the test-R^2 curve over {} offsets; using the best test R^2",
                trace.len()
            ));
        }
        chosen_index = Some(best);
    }
    let chosen_index = chosen_index.unwrap();

    Ok(SearchOutcome {
        chosen_offset: trace[chosen_index].offset,
        chosen_counts: trace[chosen_index].counts.clone(),
        chosen_model: models[chosen_index].clone(),
        chosen_index,
        trace,
        fallback_warning,
    })
}

/// Scores of the three headline models for the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub total_clusters: usize,
    pub scores: ModelScores,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_paper_values() {
        let counts = BTreeMap::from([
            (SystemKind::Water, 6usize),
            (SystemKind::Power, 7),
            (SystemKind::Transport, 7),
        ]);
        let sizes = BTreeMap::from([
            (SystemKind::Water, 52usize),
            (SystemKind::Power, 22),
            (SystemKind::Transport, 17),
        ]);
        let (b_minus, b_plus) = bounds(&counts, &sizes);
        assert_eq!(b_minus, 5);
        assert_eq!(b_plus, 10); // min(52-6, 22-7, 17-7)
    }

    #[test]
    fn unit_elbow_count_forces_zero_lower_bound() {
        let counts = BTreeMap::from([
            (SystemKind::Water, 1usize),
            (SystemKind::Power, 7),
        ]);
        let sizes = BTreeMap::from([
            (SystemKind::Water, 10usize),
            (SystemKind::Power, 10),
        ]);
        assert_eq!(bounds(&counts, &sizes).0, 0);
    }

    #[test]
    fn saturated_counts_force_zero_upper_bound() {
        let counts = BTreeMap::from([
            (SystemKind::Water, 10usize),
            (SystemKind::Power, 8),
        ]);
        let sizes = BTreeMap::from([
            (SystemKind::Water, 10usize),
            (SystemKind::Power, 8),
        ]);
        assert_eq!(bounds(&counts, &sizes).1, 0);
    }
}
