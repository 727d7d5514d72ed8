//! Report emission: the three-model comparison table and plot-ready data.

use super::{pearson, Dataset, PipelineConfig};
use crate::cluster::ElbowResult;
use crate::error::{Error, Result};
use crate::network::SystemKind;
use crate::regress::FittedModel;
use crate::search::{SearchOutcome, TraceEntry};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// One comparison row: a clustering method and its model scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub total_clusters: usize,
    pub train_r2: f64,
    pub test_r2: f64,
    pub train_rmse: f64,
    pub test_rmse: f64,
    /// Percent change versus the single-cluster baseline; `None` on the
    /// baseline row itself.
    pub rel_test_r2_pct: Option<f64>,
    pub rel_test_rmse_pct: Option<f64>,
}

/// Everything the experiment stage reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub pearson_eoh_vs_failures: f64,
    pub elbow_counts: BTreeMap<SystemKind, usize>,
    pub chosen_counts: BTreeMap<SystemKind, usize>,
    pub offset_bounds: (usize, usize),
    pub trace: Vec<TraceEntry>,
    pub warnings: Vec<String>,
    pub config_sha256: String,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn build_report(
    cfg: &PipelineConfig,
    out_dir: &Path,
    dataset: &Dataset,
    elbow: &BTreeMap<SystemKind, ElbowResult>,
    elbow_counts: &BTreeMap<SystemKind, usize>,
    outcome: &SearchOutcome,
    elbow_entry: &TraceEntry,
    single: &FittedModel,
    offset_bounds: (usize, usize),
) -> Result<ExperimentReport> {
    let mut warnings: Vec<String> = Vec::new();
    for (kind, result) in elbow {
        if let Some(w) = &result.warning {
            warnings.push(format!("elbow[{kind}]: {w}"));
        }
    }
    if let Some(w) = &outcome.fallback_warning {
        warnings.push(format!("search: {w}"));
    }

    let rel = |value: f64, base: f64| {
        if base.abs() < 1e-12 {
            None
        } else {
            Some((value - base) / base.abs() * 100.0)
        }
    };
    let single_scores = single.scores;
    let make_row = |method: &str,
                    total: usize,
                    scores: crate::regress::ModelScores,
                    is_baseline: bool| ReportRow {
        method: method.to_string(),
        total_clusters: total,
        train_r2: scores.train_r2,
        test_r2: scores.test_r2,
        train_rmse: scores.train_rmse,
        test_rmse: scores.test_rmse,
        rel_test_r2_pct: if is_baseline {
            None
        } else {
            rel(scores.test_r2, single_scores.test_r2)
        },
        rel_test_rmse_pct: if is_baseline {
            None
        } else {
            rel(scores.test_rmse, single_scores.test_rmse)
        },
    };

    let elbow_scores = crate::regress::ModelScores {
        train_r2: elbow_entry.train_r2,
        test_r2: elbow_entry.test_r2,
        train_rmse: elbow_entry.train_rmse,
        test_rmse: elbow_entry.test_rmse,
    };
    let rows = vec![
        make_row(
            "single_cluster",
            elbow_counts.len(),
            single_scores,
            true,
        ),
        make_row("elbow", elbow_entry.total_clusters, elbow_scores, false),
        make_row(
            "kneedle",
            outcome.trace[outcome.chosen_index].total_clusters,
            outcome.chosen_model.scores,
            false,
        ),
    ];

    // Table-2-shaped CSV; empty markers on the baseline row.
    {
        let mut w = csv::Writer::from_path(out_dir.join("report.csv"))?;
        w.write_record([
            "clustering_method",
            "total_clusters",
            "train_r2",
            "test_r2",
            "train_rmse",
            "test_rmse",
            "rel_test_r2",
            "rel_test_rmse",
        ])?;
        for row in &rows {
            let fmt_rel = |v: Option<f64>| {
                v.map(|p| format!("{p:+.2}%")).unwrap_or_else(|| "--".to_string())
            };
            w.write_record(&[
                row.method.clone(),
                row.total_clusters.to_string(),
                format!("{:.4}", row.train_r2),
                format!("{:.4}", row.test_r2),
                format!("{:.4}", row.train_rmse),
                format!("{:.4}", row.test_rmse),
                fmt_rel(row.rel_test_r2_pct),
                fmt_rel(row.rel_test_rmse_pct),
            ])?;
        }
        w.flush().map_err(|e| Error::io("report.csv", e))?;
    }

    // Weighted EOH versus failure count, plot-ready.
    let xs: Vec<f64> = dataset.records.iter().map(|r| r.failure_count as f64).collect();
    let ys: Vec<f64> = dataset.records.iter().map(|r| r.weighted_eoh).collect();
    let pearson_eoh_vs_failures = pearson(&xs, &ys)?;
    {
        let mut w = csv::Writer::from_path(out_dir.join("scatter.csv"))?;
        w.write_record(["scenario_id", "strategy", "failure_count", "weighted_eoh"])?;
        for r in &dataset.records {
            w.write_record(&[
                r.scenario_id.clone(),
                r.strategy.to_string(),
                r.failure_count.to_string(),
                format!("{:.6}", r.weighted_eoh),
            ])?;
        }
        w.flush().map_err(|e| Error::io("scatter.csv", e))?;
    }

    // Search trace, one row per offset.
    {
        let mut w = csv::Writer::from_path(out_dir.join("search_trace.csv"))?;
        let mut header = vec!["offset".to_string()];
        for kind in SystemKind::ALL {
            header.push(format!("clusters_{kind}"));
        }
        header.extend(
            ["total_clusters", "train_r2", "test_r2", "train_rmse", "test_rmse"]
                .map(String::from),
        );
        w.write_record(&header)?;
        for t in &outcome.trace {
            let mut row = vec![t.offset.to_string()];
            for kind in SystemKind::ALL {
                row.push(
                    t.counts
                        .get(&kind)
                        .map(|c| c.to_string())
                        .unwrap_or_else(|| "0".to_string()),
                );
            }
            row.push(t.total_clusters.to_string());
            row.push(format!("{:.6}", t.train_r2));
            row.push(format!("{:.6}", t.test_r2));
            row.push(format!("{:.6}", t.train_rmse));
            row.push(format!("{:.6}", t.test_rmse));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("search_trace.csv", e))?;
    }

    // The chosen model, loadable by `predict`.
    outcome.chosen_model.model.save(&out_dir.join("model_kneedle.json"))?;
    single.model.save(&out_dir.join("model_single.json"))?;

    let report = ExperimentReport {
        rows,
        pearson_eoh_vs_failures,
        elbow_counts: elbow_counts.clone(),
        chosen_counts: outcome.chosen_counts.clone(),
        offset_bounds,
        trace: outcome.trace.clone(),
        warnings,
        config_sha256: cfg.config_hash()?,
    };
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(out_dir.join("summary.json"), text)
        .map_err(|e| Error::io("summary.json", e))?;
    Ok(report)
}
