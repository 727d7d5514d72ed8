//! End-to-end orchestration: dataset generation, model comparison, and
//! report emission.
//!
//! Every stage writes its output as a plain file under the run directory,
//! so expensive simulation results can be reused when only downstream
//! settings change. A manifest records the config hash, all seeds, and a
//! checksum per artifact; equal manifests imply byte-identical outputs.

mod report;

pub use report::{ExperimentReport, ReportRow};

use crate::cluster::ComponentKind;
use crate::error::{Error, Result};
use crate::features::{assemble_feature_matrix, compute_component_features, FeatureKind};
use crate::hazard::{generate_scenarios, load_scenarios, save_scenarios, HazardConfig, Scenario};
use crate::network::{
    build_synthetic_testbed, validate_network, IndexedNetwork, InfraNetwork, SystemKind,
    TestbedConfig,
};
use crate::regress::{fit_and_score, ForestHyper};
use crate::rng;
use crate::search::{
    bounds, elbow_baseline, iterative_search, ClusterableSet, DatasetRow, SearchConfig,
    SearchSeeds,
};
use crate::sim::{CrewConfig, Simulator, Strategy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

/// Simulation sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub strategies: Vec<Strategy>,
    /// System weights for the weighted-EOH target.
    pub weights: BTreeMap<SystemKind, f64>,
    pub crew: CrewConfig,
    pub tmax_hr: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            strategies: Strategy::ALL.to_vec(),
            weights: BTreeMap::from([(SystemKind::Water, 0.5), (SystemKind::Power, 0.5)]),
            crew: CrewConfig::default(),
            tmax_hr: 2000.0,
        }
    }
}

/// Machine-learning settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlConfig {
    pub train_fraction: f64,
    pub cv_folds: usize,
    pub grid_trees: Vec<usize>,
    pub grid_depths: Vec<usize>,
    pub mtry_fraction: f64,
    pub min_samples_leaf: usize,
    /// Features used for component clustering.
    pub features: Vec<FeatureKind>,
    /// Component kind clustered per system.
    pub cluster_components: ComponentKind,
}

impl Default for MlConfig {
    fn default() -> Self {
        MlConfig {
            train_fraction: 0.75,
            cv_folds: 3,
            grid_trees: vec![50, 100, 200],
            grid_depths: vec![4, 8, 16],
            mtry_fraction: 1.0 / 3.0,
            min_samples_leaf: 1,
            features: FeatureKind::ALL.to_vec(),
            cluster_components: ComponentKind::Link,
        }
    }
}

impl MlConfig {
    pub fn grid(&self) -> Vec<ForestHyper> {
        let mut grid = Vec::new();
        for &n_trees in &self.grid_trees {
            for &depth in &self.grid_depths {
                grid.push(ForestHyper {
                    n_trees,
                    max_depth: Some(depth),
                    min_samples_leaf: self.min_samples_leaf,
                    mtry_fraction: self.mtry_fraction,
                    bootstrap: true,
                });
            }
        }
        grid
    }
}

/// One seed per randomized stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    pub testbed: u64,
    pub hazard: u64,
    pub cluster: u64,
    pub split: u64,
    pub cv: u64,
    pub forest: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            testbed: 1,
            hazard: 2,
            cluster: 3,
            split: 4,
            cv: 5,
            forest: 6,
        }
    }
}

impl Seeds {
    /// Derives all stage seeds from one base seed. Values are masked to
    /// 63 bits so configs stay TOML-representable.
    pub fn from_base(base: u64) -> Self {
        let derive = |tag: &str| rng::mix_tag(base, tag) & (i64::MAX as u64);
        Seeds {
            testbed: derive("testbed"),
            hazard: derive("hazard"),
            cluster: derive("cluster"),
            split: derive("split"),
            cv: derive("cv"),
            forest: derive("forest"),
        }
    }
}

/// Full pipeline configuration; all sections have defaults, so a config
/// file only overrides what it names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// When set, this network file is loaded instead of generating the
    /// synthetic testbed.
    pub network_file: Option<PathBuf>,
    pub testbed: TestbedConfig,
    pub hazard: HazardConfig,
    pub sim: SimConfig,
    pub ml: MlConfig,
    pub search: SearchConfig,
    pub seeds: Seeds,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.hazard.validate()?;
        if self.network_file.is_none() {
            self.testbed.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.sim.strategies.is_empty() {
            return Err(Error::Config("at least one recovery strategy required".into()));
        }
        if self.sim.weights.values().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Config("system weights must be finite and >= 0".into()));
        }
        if !self.sim.weights.values().any(|w| *w > 0.0) {
            return Err(Error::Config("at least one system weight must be positive".into()));
        }
        if !(self.ml.train_fraction > 0.0 && self.ml.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must be in (0, 1)".into()));
        }
        if self.ml.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be >= 2".into()));
        }
        if self.ml.grid_trees.is_empty() || self.ml.grid_depths.is_empty() {
            return Err(Error::Config("tuning grid must not be empty".into()));
        }
        if self.ml.features.is_empty() {
            return Err(Error::Config("at least one clustering feature required".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form.
    pub fn config_hash(&self) -> Result<String> {
        Ok(hex_digest(self.to_toml_string()?.as_bytes()))
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// One simulated (scenario, strategy) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub scenario_id: String,
    pub strategy: Strategy,
    pub intensity: f64,
    pub failed_links: BTreeMap<SystemKind, Vec<String>>,
    pub failed_nodes: BTreeMap<SystemKind, Vec<String>>,
    pub failure_count: usize,
    pub gamma: BTreeMap<SystemKind, f64>,
    pub weighted_eoh: f64,
}

impl SimRecord {
    pub fn to_dataset_row(&self) -> DatasetRow {
        DatasetRow {
            scenario_id: self.scenario_id.clone(),
            failed_links: self.failed_links.clone(),
            failed_nodes: self.failed_nodes.clone(),
            strategy: self.strategy,
            target: self.weighted_eoh,
        }
    }
}

/// The generated dataset and where its artifacts live.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub network: InfraNetwork,
    pub scenarios: Vec<Scenario>,
    pub records: Vec<SimRecord>,
}

pub fn save_records_jsonl(path: &Path, records: &[SimRecord]) -> Result<()> {
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_records_jsonl(path: &Path) -> Result<Vec<SimRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn save_records_csv(path: &Path, records: &[SimRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "scenario_id".to_string(),
        "strategy".to_string(),
        "intensity".to_string(),
        "failure_count".to_string(),
    ];
    for kind in SystemKind::ALL {
        header.push(format!("gamma_{kind}"));
    }
    header.push("weighted_eoh".to_string());
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.scenario_id.clone(),
            r.strategy.to_string(),
            format!("{}", r.intensity),
            format!("{}", r.failure_count),
        ];
        for kind in SystemKind::ALL {
            row.push(format!("{:.6}", r.gamma.get(&kind).copied().unwrap_or(0.0)));
        }
        row.push(format!("{:.6}", r.weighted_eoh));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

fn stage<T>(name: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        already @ Error::Stage { .. } => already,
        other => Error::stage(name, other),
    })
}

fn load_or_build_network(cfg: &PipelineConfig) -> Result<InfraNetwork> {
    let network = match &cfg.network_file {
        Some(path) => InfraNetwork::load(path)?,
        None => build_synthetic_testbed(&cfg.testbed, cfg.seeds.testbed)?,
    };
    let report = validate_network(&network);
    if !report.is_valid() {
        let sample: Vec<String> = report
            .violations
            .iter()
            .take(5)
            .map(|v| format!("{} ({})", v.message, v.subject))
            .collect();
        return Err(Error::InvalidArgument(format!(
            "network has {} invariant violations: {}",
            report.violations.len(),
            sample.join("; ")
        )));
    }
    Ok(network)
}

/// Simulates every (scenario, strategy) pair into one record each.
pub fn simulate_dataset(
    net: &IndexedNetwork,
    scenarios: &[Scenario],
    cfg: &SimConfig,
) -> Result<Vec<SimRecord>> {
    let simulator = Simulator::new(net, cfg.crew.clone(), cfg.weights.clone())?;
    let pairs: Vec<(usize, Strategy)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(i, _)| cfg.strategies.iter().map(move |s| (i, *s)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, strategy)| {
            let scenario = &scenarios[i];
            let result = simulator.simulate(scenario, strategy, cfg.tmax_hr)?;
            Ok(SimRecord {
                scenario_id: scenario.id.clone(),
                strategy,
                intensity: scenario.intensity,
                failed_links: scenario.failed_links.clone(),
                failed_nodes: scenario.failed_nodes.clone(),
                failure_count: scenario.total_failures(),
                gamma: result.gamma,
                weighted_eoh: result.weighted_eoh,
            })
        })
        .collect()
}

/// Dataset generation stage: network, scenarios, simulations, artifacts.
pub fn run_dataset(cfg: &PipelineConfig, out_dir: &Path) -> Result<Dataset> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;

    eprintln!("[network] building network");
    let network = stage("network", load_or_build_network(cfg))?;
    network.save(&out_dir.join("network.json"))?;
    let indexed = stage("network", IndexedNetwork::build(&network))?;

    eprintln!("[scenarios] generating {} scenarios", cfg.hazard.scenario_count);
    let scenarios = stage(
        "scenarios",
        generate_scenarios(&indexed, &cfg.hazard, cfg.seeds.hazard),
    )?;
    save_scenarios(&out_dir.join("scenarios.jsonl"), &scenarios)?;

    eprintln!(
        "[simulate] {} scenarios x {} strategies",
        scenarios.len(),
        cfg.sim.strategies.len()
    );
    let records = stage("simulate", simulate_dataset(&indexed, &scenarios, &cfg.sim))?;
    save_records_jsonl(&out_dir.join("records.jsonl"), &records)?;
    save_records_csv(&out_dir.join("records.csv"), &records)?;

    // Sample PCS series and event log for the first pair, plot-ready.
    let simulator = stage(
        "simulate",
        Simulator::new(&indexed, cfg.sim.crew.clone(), cfg.sim.weights.clone()),
    )?;
    if let (Some(scenario), Some(&strategy)) = (scenarios.first(), cfg.sim.strategies.first()) {
        let sample = stage(
            "simulate",
            simulator.simulate(scenario, strategy, cfg.sim.tmax_hr),
        )?;
        let mut w = csv::Writer::from_path(out_dir.join("pcs_sample.csv"))?;
        w.write_record(["system", "t_hr", "pcs"])?;
        for (kind, points) in &sample.pcs_series {
            for (t, v) in points {
                w.write_record(&[kind.to_string(), format!("{t:.6}"), format!("{v:.6}")])?;
            }
        }
        w.flush().map_err(|e| Error::io("pcs_sample.csv", e))?;
        let file = std::fs::File::create(out_dir.join("events_sample.jsonl"))
            .map_err(|e| Error::io("events_sample.jsonl", e))?;
        let mut ew = std::io::BufWriter::new(file);
        for event in &sample.events {
            serde_json::to_writer(&mut ew, event)?;
            ew.write_all(b"\n")
                .map_err(|e| Error::io("events_sample.jsonl", e))?;
        }
    }

    Ok(Dataset {
        network,
        scenarios,
        records,
    })
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "pearson needs two equal-length series of >= 2 points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::InvalidArgument(
            "pearson undefined for constant series".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Builds the clusterable feature matrices from the baseline flows.
pub fn build_feature_set(
    net: &IndexedNetwork,
    ml: &MlConfig,
) -> Result<(ClusterableSet, BTreeMap<SystemKind, (crate::features::FeatureMatrix, crate::features::FeatureMatrix)>)> {
    let simulator = Simulator::new(net, CrewConfig::default(), BTreeMap::new())?;
    let baseline = simulator.baseline();
    let mut per_system = BTreeMap::new();
    let mut all_matrices = BTreeMap::new();
    for (kind, sys) in &net.systems {
        let flows: BTreeMap<String, f64> = sys
            .link_ids
            .iter()
            .enumerate()
            .map(|(e, id)| (id.clone(), baseline.snapshot.link_flow[kind][e]))
            .collect();
        let (node_feats, link_feats) = compute_component_features(sys, &flows)?;
        for f in node_feats.iter().chain(&link_feats) {
            if !f.is_well_formed() {
                return Err(Error::InvalidArgument(format!(
                    "feature values out of range for `{}`",
                    f.id
                )));
            }
        }
        let node_matrix = assemble_feature_matrix(&node_feats, &ml.features)?;
        let link_matrix = assemble_feature_matrix(&link_feats, &ml.features)?;
        let chosen = match ml.cluster_components {
            ComponentKind::Node => node_matrix.clone(),
            ComponentKind::Link => link_matrix.clone(),
        };
        per_system.insert(*kind, (ml.cluster_components, chosen));
        all_matrices.insert(*kind, (node_matrix, link_matrix));
    }
    Ok((
        ClusterableSet { per_system },
        all_matrices,
    ))
}

/// Manifest: config hash, seeds, and artifact checksums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seeds: Seeds,
    pub artifacts: BTreeMap<String, String>,
}

pub fn write_manifest(cfg: &PipelineConfig, out_dir: &Path) -> Result<Manifest> {
    let mut artifacts = BTreeMap::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(out_dir)
        .map_err(|e| Error::io(out_dir.display().to_string(), e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.file_name().map(|n| n != "manifest.json").unwrap_or(false))
        .collect();
    entries.sort();
    for path in entries {
        let bytes = std::fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        artifacts.insert(name, hex_digest(&bytes));
    }
    let manifest = Manifest {
        config_sha256: cfg.config_hash()?,
        seeds: cfg.seeds,
        artifacts,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out_dir.join("manifest.json"), text)
        .map_err(|e| Error::io("manifest.json", e))?;
    Ok(manifest)
}

/// Experiment stage: features, clustering baselines, cluster-count search,
/// and the three-model comparison report.
pub fn run_experiment(
    cfg: &PipelineConfig,
    out_dir: &Path,
    dataset: Option<Dataset>,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;

    let dataset = match dataset {
        Some(d) => d,
        None => {
            let records_path = out_dir.join("records.jsonl");
            let network_path = out_dir.join("network.json");
            let scenarios_path = out_dir.join("scenarios.jsonl");
            if records_path.exists() && network_path.exists() && scenarios_path.exists() {
                eprintln!("[dataset] reusing cached artifacts in {}", out_dir.display());
                Dataset {
                    network: InfraNetwork::load(&network_path)?,
                    scenarios: load_scenarios(&scenarios_path)?,
                    records: load_records_jsonl(&records_path)?,
                }
            } else {
                run_dataset(cfg, out_dir)?
            }
        }
    };
    if dataset.records.is_empty() {
        return Err(Error::stage("experiment", "dataset has no records"));
    }

    let indexed = stage("features", IndexedNetwork::build(&dataset.network))?;
    eprintln!("[features] computing component features");
    let (set, all_matrices) = stage("features", build_feature_set(&indexed, &cfg.ml))?;
    for (kind, (node_matrix, link_matrix)) in &all_matrices {
        node_matrix.save_csv(&out_dir.join(format!("features_{kind}_nodes.csv")))?;
        link_matrix.save_csv(&out_dir.join(format!("features_{kind}_links.csv")))?;
    }

    eprintln!("[elbow] scanning inertia curves");
    let elbow = stage("elbow", elbow_baseline(&set, &cfg.search, cfg.seeds.cluster))?;
    let elbow_counts: BTreeMap<SystemKind, usize> =
        elbow.iter().map(|(k, r)| (*k, r.k_star)).collect();
    {
        let mut w = csv::Writer::from_path(out_dir.join("inertia_curves.csv"))?;
        w.write_record(["system", "k", "inertia"])?;
        for (kind, result) in &elbow {
            for (k, inertia) in &result.curve {
                w.write_record(&[kind.to_string(), k.to_string(), format!("{inertia:.6}")])?;
            }
        }
        w.flush().map_err(|e| Error::io("inertia_curves.csv", e))?;
    }

    let rows: Vec<DatasetRow> = dataset.records.iter().map(|r| r.to_dataset_row()).collect();
    let grid = cfg.ml.grid();
    let seeds = SearchSeeds {
        cluster: cfg.seeds.cluster,
        split: cfg.seeds.split,
        cv: cfg.seeds.cv,
        forest: cfg.seeds.forest,
    };

    eprintln!("[search] evaluating cluster-count offsets");
    let outcome = stage(
        "search",
        iterative_search(
            &rows,
            &set,
            &elbow_counts,
            &cfg.search,
            &grid,
            cfg.ml.cv_folds,
            cfg.ml.train_fraction,
            seeds,
        ),
    )?;

    // Single-cluster baseline: one failure-count feature per system.
    eprintln!("[baseline] fitting single-cluster model");
    let (train_idx, test_idx) = stage(
        "baseline",
        crate::regress::split_indices(rows.len(), cfg.ml.train_fraction, seeds.split),
    )?;
    let baseline_x: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut v: Vec<f64> = crate::regress::per_system_counts(&r.failed_links, &r.failed_nodes)
                .iter()
                .map(|&c| c as f64)
                .collect();
            v.extend(crate::regress::strategy_one_hot(r.strategy));
            v
        })
        .collect();
    let baseline_y: Vec<f64> = rows.iter().map(|r| r.target).collect();
    let single = stage(
        "baseline",
        fit_and_score(
            &baseline_x,
            &baseline_y,
            &train_idx,
            &test_idx,
            &grid,
            cfg.ml.cv_folds,
            seeds.cv,
            seeds.forest,
        ),
    )?;

    let elbow_entry = outcome
        .trace
        .iter()
        .find(|t| t.offset == 0)
        .ok_or_else(|| Error::stage("search", "offset 0 missing from trace"))?;

    let report = report::build_report(
        cfg,
        out_dir,
        &dataset,
        &elbow,
        &elbow_counts,
        &outcome,
        elbow_entry,
        &single,
        bounds(&elbow_counts, &set.sizes()),
    )?;

    write_manifest(cfg, out_dir)?;
    Ok(report)
}

/// Full pipeline: dataset then experiment.
pub fn run_all(cfg: &PipelineConfig, out_dir: &Path) -> Result<ExperimentReport> {
    let dataset = run_dataset(cfg, out_dir)?;
    run_experiment(cfg, out_dir, Some(dataset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        let text = cfg.to_toml_string().unwrap();
        let back = PipelineConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_toml_overrides_only_named_fields() {
        let cfg = PipelineConfig::from_toml_str(
            "[hazard]\nscenario_count = 12\n[testbed]\nrows = 4\ncols = 5\n",
        )
        .unwrap();
        assert_eq!(cfg.hazard.scenario_count, 12);
        assert_eq!(cfg.testbed.rows, 4);
        assert_eq!(cfg.testbed.cols, 5);
        assert_eq!(cfg.hazard.max_failures, 35);
        assert_eq!(cfg.ml.cv_folds, 3);
    }

    #[test]
    fn zero_strategies_is_a_config_error() {
        let err = PipelineConfig::from_toml_str("[sim]\nstrategies = []\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = PipelineConfig::default().config_hash().unwrap();
        let b = PipelineConfig::default().config_hash().unwrap();
        assert_eq!(a, b);
        let mut cfg = PipelineConfig::default();
        cfg.hazard.scenario_count += 1;
        assert_ne!(a, cfg.config_hash().unwrap());
    }

    #[test]
    fn pearson_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let anti: Vec<f64> = ys.iter().map(|v| -v).collect();
        assert!((pearson(&xs, &anti).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson(&xs, &[1.0, 1.0, 1.0, 1.0]).is_err());
    }
}
