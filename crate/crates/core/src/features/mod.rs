//! Topological and functional features of infrastructure components.
//!
//! For every node and link of a system graph this module computes degree,
//! betweenness, eigenvector, and closeness centralities plus flow-rate and
//! betweenness-weighted flow-rate, then assembles z-score-standardized
//! feature matrices used for component clustering. Node-valued features of
//! a link (degree, eigenvector, closeness at its endpoints) are carried as
//! the order-invariant (min, max) pair of the endpoint values.

mod centrality;

pub use centrality::{
    betweenness_centrality, closeness_centrality, degree_centrality, eigenvector_centrality,
    SimpleGraph,
};

use crate::error::{Error, Result};
use crate::network::IndexedSystem;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Default tolerance for eigenvector power iteration.
pub const EIG_TOL: f64 = 1e-10;
/// Default iteration cap for eigenvector power iteration.
pub const EIG_MAX_ITER: usize = 100_000;

/// The six features available for clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Degree,
    Betweenness,
    Eigenvector,
    Closeness,
    Flow,
    WeightedFlow,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::Degree,
        FeatureKind::Betweenness,
        FeatureKind::Eigenvector,
        FeatureKind::Closeness,
        FeatureKind::Flow,
        FeatureKind::WeightedFlow,
    ];

    fn base_name(&self) -> &'static str {
        match self {
            FeatureKind::Degree => "degree",
            FeatureKind::Betweenness => "betweenness",
            FeatureKind::Eigenvector => "eigenvector",
            FeatureKind::Closeness => "closeness",
            FeatureKind::Flow => "flow",
            FeatureKind::WeightedFlow => "weighted_flow",
        }
    }
}

/// A feature value: scalar for nodes, endpoint (min, max) pair for the
/// node-valued features of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureValue {
    Scalar(f64),
    Pair(f64, f64),
}

impl FeatureValue {
    fn pair(a: f64, b: f64) -> Self {
        FeatureValue::Pair(a.min(b), a.max(b))
    }

    fn columns(&self) -> Vec<f64> {
        match self {
            FeatureValue::Scalar(v) => vec![*v],
            FeatureValue::Pair(a, b) => vec![*a, *b],
        }
    }

    fn all_finite_nonneg(&self) -> bool {
        self.columns().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// The computed feature tuple of one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFeatures {
    pub id: String,
    pub degree: FeatureValue,
    pub betweenness: f64,
    pub eigenvector: FeatureValue,
    pub closeness: FeatureValue,
    pub flow: f64,
    pub weighted_flow: f64,
}

impl ComponentFeatures {
    fn value(&self, kind: FeatureKind) -> FeatureValue {
        match kind {
            FeatureKind::Degree => self.degree,
            FeatureKind::Betweenness => FeatureValue::Scalar(self.betweenness),
            FeatureKind::Eigenvector => self.eigenvector,
            FeatureKind::Closeness => self.closeness,
            FeatureKind::Flow => FeatureValue::Scalar(self.flow),
            FeatureKind::WeightedFlow => FeatureValue::Scalar(self.weighted_flow),
        }
    }

    /// All values finite and non-negative, centralities within [0, 1].
    pub fn is_well_formed(&self) -> bool {
        let unit = |v: &FeatureValue| v.columns().iter().all(|x| (0.0..=1.0 + 1e-9).contains(x));
        self.degree.all_finite_nonneg()
            && self.eigenvector.all_finite_nonneg()
            && self.closeness.all_finite_nonneg()
            && self.flow.is_finite()
            && self.flow >= 0.0
            && self.weighted_flow.is_finite()
            && self.weighted_flow >= 0.0
            && (0.0..=1.0 + 1e-9).contains(&self.betweenness)
            && unit(&self.eigenvector)
            && unit(&self.closeness)
    }
}

/// Flow-rate features: per node `Q_i = sum of |q| over incident links` and
/// its betweenness-weighted variant; per link `|q|` and `C_b * |q|`.
///
/// `flows` maps edge index to the signed steady flow; every live edge must
/// be present.
pub fn flow_features(
    g: &SimpleGraph,
    flows: &BTreeMap<usize, f64>,
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let (_, edge_btw) = betweenness_centrality(g);
    let mut link_out = Vec::with_capacity(g.edge_count());
    for e in 0..g.edge_count() {
        let q = flows.get(&e).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("missing flow entry for live link index {e}"))
        })?;
        link_out.push((q.abs(), edge_btw[e] * q.abs()));
    }
    let mut node_out = vec![(0.0, 0.0); g.node_count()];
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        let (q, qw) = link_out[e];
        node_out[a].0 += q;
        node_out[a].1 += qw;
        node_out[b].0 += q;
        node_out[b].1 += qw;
    }
    Ok((node_out, link_out))
}

/// Computes the full Table of component features for one system.
///
/// `link_flows` maps link id to the signed baseline flow from the
/// no-failure simulation.
pub fn compute_component_features(
    sys: &IndexedSystem,
    link_flows: &BTreeMap<String, f64>,
) -> Result<(Vec<ComponentFeatures>, Vec<ComponentFeatures>)> {
    let g = SimpleGraph::new(sys.node_count(), sys.links.clone())?;
    let degree = degree_centrality(&g);
    let (node_btw, edge_btw) = betweenness_centrality(&g);
    let (eig, _lambda) = eigenvector_centrality(&g, EIG_TOL, EIG_MAX_ITER)?;
    let clo = closeness_centrality(&g)?;

    let mut flows_by_index = BTreeMap::new();
    for (i, id) in sys.link_ids.iter().enumerate() {
        let q = link_flows.get(id).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("missing flow entry for live link `{id}`"))
        })?;
        flows_by_index.insert(i, q);
    }
    let (node_flow, link_flow) = flow_features(&g, &flows_by_index)?;

    let nodes = (0..sys.node_count())
        .map(|v| ComponentFeatures {
            id: sys.node_ids[v].clone(),
            degree: FeatureValue::Scalar(degree[v]),
            betweenness: node_btw[v],
            eigenvector: FeatureValue::Scalar(eig[v]),
            closeness: FeatureValue::Scalar(clo[v]),
            flow: node_flow[v].0,
            weighted_flow: node_flow[v].1,
        })
        .collect();

    let links = (0..sys.link_count())
        .map(|e| {
            let (a, b) = sys.links[e];
            ComponentFeatures {
                id: sys.link_ids[e].clone(),
                degree: FeatureValue::pair(degree[a], degree[b]),
                betweenness: edge_btw[e],
                eigenvector: FeatureValue::pair(eig[a], eig[b]),
                closeness: FeatureValue::pair(clo[a], clo[b]),
                flow: link_flow[e].0,
                weighted_flow: link_flow[e].1,
            }
        })
        .collect();

    Ok((nodes, links))
}

/// A standardized per-component feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub component_ids: Vec<String>,
    pub feature_names: Vec<String>,
    /// Row-major standardized values; `rows.len() == component_ids.len()`.
    pub rows: Vec<Vec<f64>>,
    /// Per-column mean of the raw values.
    pub means: Vec<f64>,
    /// Per-column population standard deviation of the raw values; 0 marks
    /// a constant column that was zeroed.
    pub stds: Vec<f64>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    /// Builds a matrix from raw columns and z-score-standardizes each
    /// column (population stddev; constant columns map to all-zeros).
    pub fn from_raw_columns(
        component_ids: Vec<String>,
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if component_ids.is_empty() {
            return Err(Error::EmptyInput("feature matrix has no components".into()));
        }
        if columns.len() != feature_names.len() {
            return Err(Error::InvalidArgument(
                "feature name/column count mismatch".into(),
            ));
        }
        let n = component_ids.len();
        let mut means = Vec::with_capacity(columns.len());
        let mut stds = Vec::with_capacity(columns.len());
        let mut std_cols = Vec::with_capacity(columns.len());
        for col in &columns {
            if col.len() != n {
                return Err(Error::InvalidArgument(
                    "feature column length mismatch".into(),
                ));
            }
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let std = var.sqrt();
            if std < 1e-12 {
                means.push(mean);
                stds.push(0.0);
                std_cols.push(vec![0.0; n]);
            } else {
                means.push(mean);
                stds.push(std);
                std_cols.push(col.iter().map(|v| (v - mean) / std).collect());
            }
        }
        let rows = (0..n)
            .map(|i| std_cols.iter().map(|c| c[i]).collect())
            .collect();
        Ok(FeatureMatrix {
            component_ids,
            feature_names,
            rows,
            means,
            stds,
        })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["component_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        wtr.write_record(&header)?;
        for (id, row) in self.component_ids.iter().zip(&self.rows) {
            let mut record = vec![id.clone()];
            record.extend(row.iter().map(|v| format!("{v}")));
            wtr.write_record(&record)?;
        }
        let bytes = wtr
            .into_inner()
            .map_err(|e| Error::Serde(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Reads a matrix exported by [`FeatureMatrix::to_csv_string`]. Values
    /// are taken as already standardized.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
        let header = rdr.headers()?.clone();
        if header.is_empty() || &header[0] != "component_id" {
            return Err(Error::Serde(
                "feature CSV must start with a component_id column".into(),
            ));
        }
        let feature_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut component_ids = Vec::new();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            component_ids.push(record[0].to_string());
            let row = record
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Error::Serde(format!("bad feature value `{v}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if component_ids.is_empty() {
            return Err(Error::EmptyInput("feature CSV has no rows".into()));
        }
        let cols = feature_names.len();
        Ok(FeatureMatrix {
            component_ids,
            feature_names,
            rows,
            means: vec![0.0; cols],
            stds: vec![1.0; cols],
        })
    }
}

/// Assembles the standardized feature matrix for a homogeneous component
/// set (all nodes or all links of one system).
pub fn assemble_feature_matrix(
    components: &[ComponentFeatures],
    selected: &[FeatureKind],
) -> Result<FeatureMatrix> {
    if components.is_empty() {
        return Err(Error::EmptyInput("no components to assemble".into()));
    }
    if selected.is_empty() {
        return Err(Error::InvalidArgument("no features selected".into()));
    }
    let ids: Vec<String> = components.iter().map(|c| c.id.clone()).collect();
    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for kind in selected {
        let first = components[0].value(*kind);
        match first {
            FeatureValue::Scalar(_) => {
                names.push(kind.base_name().to_string());
                columns.push(
                    components
                        .iter()
                        .map(|c| match c.value(*kind) {
                            FeatureValue::Scalar(v) => Ok(v),
                            FeatureValue::Pair(..) => Err(Error::InvalidArgument(
                                "mixed scalar/pair feature values".into(),
                            )),
                        })
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            FeatureValue::Pair(..) => {
                names.push(format!("{}_min", kind.base_name()));
                names.push(format!("{}_max", kind.base_name()));
                let mut lo = Vec::with_capacity(components.len());
                let mut hi = Vec::with_capacity(components.len());
                for c in components {
                    match c.value(*kind) {
                        FeatureValue::Pair(a, b) => {
                            lo.push(a);
                            hi.push(b);
                        }
                        FeatureValue::Scalar(_) => {
                            return Err(Error::InvalidArgument(
                                "mixed scalar/pair feature values".into(),
                            ))
                        }
                    }
                }
                columns.push(lo);
                columns.push(hi);
            }
        }
    }
    FeatureMatrix::from_raw_columns(ids, names, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardization_matches_hand_computation() {
        let m = FeatureMatrix::from_raw_columns(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["f".into()],
            vec![vec![2.0, 4.0, 6.0]],
        )
        .unwrap();
        let col: Vec<f64> = m.rows.iter().map(|r| r[0]).collect();
        assert!((col[0] + 1.2247448713915890).abs() < 1e-12);
        assert!(col[1].abs() < 1e-12);
        assert!((col[2] - 1.2247448713915890).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_zeroed() {
        let m = FeatureMatrix::from_raw_columns(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["f".into()],
            vec![vec![5.0, 5.0, 5.0]],
        )
        .unwrap();
        assert!(m.rows.iter().all(|r| r[0] == 0.0));
        assert_eq!(m.stds[0], 0.0);
    }

    #[test]
    fn single_component_single_feature_is_zero() {
        let m = FeatureMatrix::from_raw_columns(
            vec!["a".into()],
            vec!["f".into()],
            vec![vec![3.5]],
        )
        .unwrap();
        assert_eq!(m.rows, vec![vec![0.0]]);
    }

    #[test]
    fn empty_component_set_is_an_error() {
        assert!(FeatureMatrix::from_raw_columns(vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn flow_feature_examples() {
        // path a-b-c with flows 3 and -5: Q(b) = 8
        let g = SimpleGraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let flows = BTreeMap::from([(0usize, 3.0), (1usize, -5.0)]);
        let (nodes, links) = flow_features(&g, &flows).unwrap();
        assert_eq!(nodes[1].0, 8.0);
        // link q = -4 with betweenness 0.5 would give (4, 2); here check the
        // definition against the computed P3 edge betweenness of 2/3
        assert_eq!(links[1].0, 5.0);
        assert!((links[1].1 - 2.0 / 3.0 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_flow_gives_zero_features() {
        let g = SimpleGraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let flows = BTreeMap::from([(0usize, 0.0), (1usize, 0.0)]);
        let (nodes, links) = flow_features(&g, &flows).unwrap();
        assert!(nodes.iter().all(|&(q, w)| q == 0.0 && w == 0.0));
        assert!(links.iter().all(|&(q, w)| q == 0.0 && w == 0.0));
    }

    #[test]
    fn missing_flow_entry_is_an_error() {
        let g = SimpleGraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let flows = BTreeMap::from([(0usize, 1.0)]);
        assert!(flow_features(&g, &flows).is_err());
    }

    #[test]
    fn standardization_is_idempotent_on_nonconstant_columns() {
        let raw = vec![1.0, 2.0, 4.0, 8.0];
        let m1 = FeatureMatrix::from_raw_columns(
            (0..4).map(|i| format!("c{i}")).collect(),
            vec!["f".into()],
            vec![raw],
        )
        .unwrap();
        let col1: Vec<f64> = m1.rows.iter().map(|r| r[0]).collect();
        let m2 = FeatureMatrix::from_raw_columns(
            m1.component_ids.clone(),
            vec!["f".into()],
            vec![col1.clone()],
        )
        .unwrap();
        let col2: Vec<f64> = m2.rows.iter().map(|r| r[0]).collect();
        for (a, b) in col1.iter().zip(&col2) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
