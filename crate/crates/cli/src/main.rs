//! Command-line pipeline for infrastructure resilience experiments.
//!
//! Verbs mirror the pipeline stages; every stage reads and writes plain
//! files under `--out-dir`, so stages can be re-run independently. Exit
//! codes: 0 success, 2 configuration error, 3 stage failure.

use clap::{Parser, Subcommand};
use resilsim_core::cluster::{elbow_k, kmeans, DEFAULT_RESTARTS};
use resilsim_core::error::{Error, Result};
use resilsim_core::features::FeatureMatrix;
use resilsim_core::hazard::{generate_scenarios, load_scenarios, save_scenarios};
use resilsim_core::network::{build_synthetic_testbed, IndexedNetwork, InfraNetwork, SystemKind};
use resilsim_core::pipeline::{
    run_all, run_experiment, simulate_dataset, save_records_csv, save_records_jsonl,
    PipelineConfig, Seeds, SimConfig,
};
use resilsim_core::regress::{cross_validate, train_forest, ForestModel};
use resilsim_core::sim::Strategy;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "resilsim",
    about = "Interdependent infrastructure resilience pipeline",
    version
)]
struct Cli {
    /// Pipeline config file (TOML); built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed; when set, every stage seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for stage artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic testbed network file.
    Testbed {
        /// Output network file (default: <out-dir>/network.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate hazard scenarios for a network.
    GenerateScenarios {
        /// Network file (default: <out-dir>/network.json).
        #[arg(long)]
        net: Option<PathBuf>,
        /// Output scenario store (default: <out-dir>/scenarios.jsonl).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate scenarios under one recovery strategy.
    Simulate {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        strategy: Strategy,
        /// System weights as `w_power,w_water,w_transport`.
        #[arg(long)]
        weights: Option<String>,
        /// Output records file (JSON lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Export standardized per-component feature matrices as CSV.
    Features {
        #[arg(long)]
        net: PathBuf,
    },
    /// Cluster a feature matrix CSV with K-means.
    Cluster {
        #[arg(long)]
        features: PathBuf,
        /// Cluster count, or `auto` for elbow selection.
        #[arg(long)]
        k: String,
        /// Output assignment CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a random forest on a CSV whose last column is the target.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 3)]
        folds: usize,
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Predict with a saved model on a CSV of predictors.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cluster-count search and print the chosen counts.
    SearchK,
    /// Build the comparison report from existing (or fresh) artifacts.
    Report,
    /// Run the whole pipeline: dataset, search, report.
    RunAll,
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(base) = cli.seed {
        cfg.seeds = Seeds::from_base(base);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_weights(spec: &str) -> Result<BTreeMap<SystemKind, f64>> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != SystemKind::ALL.len() {
        return Err(Error::InvalidArgument(format!(
            "--weights wants {} comma-separated values (power,water,transport)",
            SystemKind::ALL.len()
        )));
    }
    let mut weights = BTreeMap::new();
    for (kind, part) in SystemKind::ALL.iter().zip(parts) {
        let w: f64 = part
            .trim()
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("bad weight `{part}`: {e}")))?;
        if !(w >= 0.0) {
            return Err(Error::InvalidArgument("weights must be >= 0".into()));
        }
        weights.insert(*kind, w);
    }
    Ok(weights)
}

/// Reads a training CSV: header row, last column is the target.
fn read_training_csv(path: &PathBuf) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<String>)> {
    let mut rdr =
        csv::Reader::from_path(path).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Serde(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 {
        return Err(Error::InvalidArgument(
            "training CSV needs at least one predictor and a target column".into(),
        ));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Serde(e.to_string()))?;
        let mut row: Vec<f64> = Vec::with_capacity(record.len());
        for field in record.iter() {
            row.push(
                field
                    .parse()
                    .map_err(|e| Error::Serde(format!("bad value `{field}`: {e}")))?,
            );
        }
        let target = row.pop().unwrap();
        x.push(row);
        y.push(target);
    }
    Ok((x, y, header))
}

fn print_report(report: &resilsim_core::pipeline::ExperimentReport) {
    println!(
        "{:<16} {:>8} {:>9} {:>9} {:>11} {:>10} {:>12} {:>13}",
        "method", "clusters", "train_r2", "test_r2", "train_rmse", "test_rmse", "rel_test_r2", "rel_test_rmse"
    );
    for row in &report.rows {
        let rel = |v: Option<f64>| v.map(|p| format!("{p:+.2}%")).unwrap_or_else(|| "--".into());
        println!(
            "{:<16} {:>8} {:>9.4} {:>9.4} {:>11.4} {:>10.4} {:>12} {:>13}",
            row.method,
            row.total_clusters,
            row.train_r2,
            row.test_r2,
            row.train_rmse,
            row.test_rmse,
            rel(row.rel_test_r2_pct),
            rel(row.rel_test_rmse_pct),
        );
    }
    println!(
        "pearson(weighted EOH, failure count) = {:.4}",
        report.pearson_eoh_vs_failures
    );
    for warning in &report.warnings {
        println!("warning: {warning}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = effective_config(&cli)?;
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| Error::io(cli.out_dir.display().to_string(), e))?;

    match &cli.command {
        Command::Testbed { out } => {
            let path = out.clone().unwrap_or_else(|| cli.out_dir.join("network.json"));
            let net = build_synthetic_testbed(&cfg.testbed, cfg.seeds.testbed)?;
            net.save(&path)?;
            println!("wrote {}", path.display());
        }
        Command::GenerateScenarios { net, out } => {
            let net_path = net.clone().unwrap_or_else(|| cli.out_dir.join("network.json"));
            let out_path = out.clone().unwrap_or_else(|| cli.out_dir.join("scenarios.jsonl"));
            let network = InfraNetwork::load(&net_path)?;
            let indexed = IndexedNetwork::build(&network)?;
            let scenarios = generate_scenarios(&indexed, &cfg.hazard, cfg.seeds.hazard)?;
            save_scenarios(&out_path, &scenarios)?;
            println!("wrote {} scenarios to {}", scenarios.len(), out_path.display());
        }
        Command::Simulate {
            net,
            scenarios,
            strategy,
            weights,
            out,
        } => {
            let network = InfraNetwork::load(net)?;
            let indexed = IndexedNetwork::build(&network)?;
            let scenarios = load_scenarios(scenarios)?;
            let mut sim_cfg = SimConfig {
                strategies: vec![*strategy],
                ..cfg.sim.clone()
            };
            if let Some(spec) = weights {
                sim_cfg.weights = parse_weights(spec)?;
            }
            let records = simulate_dataset(&indexed, &scenarios, &sim_cfg)?;
            save_records_jsonl(out, &records)?;
            if let Some(csv_path) = out.to_str().and_then(|s| s.strip_suffix(".jsonl")) {
                save_records_csv(&PathBuf::from(format!("{csv_path}.csv")), &records)?;
            }
            println!("wrote {} records to {}", records.len(), out.display());
        }
        Command::Features { net } => {
            let network = InfraNetwork::load(net)?;
            let indexed = IndexedNetwork::build(&network)?;
            let (_, matrices) = resilsim_core::pipeline::build_feature_set(&indexed, &cfg.ml)?;
            for (kind, (nodes, links)) in &matrices {
                let node_path = cli.out_dir.join(format!("features_{kind}_nodes.csv"));
                let link_path = cli.out_dir.join(format!("features_{kind}_links.csv"));
                nodes.save_csv(&node_path)?;
                links.save_csv(&link_path)?;
                println!("wrote {} and {}", node_path.display(), link_path.display());
            }
        }
        Command::Cluster { features, k, out } => {
            let matrix = FeatureMatrix::load_csv(features)?;
            let chosen_k = if k == "auto" {
                let result = elbow_k(
                    &matrix,
                    (1, cfg.search.elbow_k_max),
                    cfg.seeds.cluster,
                    cfg.search.restarts,
                    cfg.search.kneedle_sensitivity,
                )?;
                if let Some(w) = &result.warning {
                    eprintln!("warning: {w}");
                }
                result.k_star
            } else {
                k.parse::<usize>()
                    .map_err(|e| Error::InvalidArgument(format!("bad --k `{k}`: {e}")))?
            };
            let result = kmeans(&matrix.rows, chosen_k, cfg.seeds.cluster, DEFAULT_RESTARTS)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["component_id", "system", "kind", "cluster"])
                .map_err(|e| Error::Serde(e.to_string()))?;
            for (id, cluster) in matrix.component_ids.iter().zip(&result.assignments) {
                let mut parts = id.splitn(3, ':');
                let system = parts.next().unwrap_or("");
                let kind = parts.next().unwrap_or("");
                w.write_record(&[id.clone(), system.into(), kind.into(), cluster.to_string()])
                    .map_err(|e| Error::Serde(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
            let text = String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))?;
            match out {
                Some(path) => {
                    std::fs::write(path, text)
                        .map_err(|e| Error::io(path.display().to_string(), e))?;
                    println!("wrote {} (k = {chosen_k}, inertia = {:.6})", path.display(), result.inertia);
                }
                None => print!("{text}"),
            }
        }
        Command::Train {
            data,
            folds,
            model_out,
        } => {
            let (x, y, header) = read_training_csv(data)?;
            let grid = cfg.ml.grid();
            let outcome = cross_validate(&x, &y, &grid, *folds, cfg.seeds.cv)?;
            let mut model = train_forest(&x, &y, &outcome.best, cfg.seeds.forest)?;
            model.feature_names = Some(header[..header.len() - 1].to_vec());
            model.save(model_out)?;
            println!(
                "trained {} trees (depth {:?}), cv R^2 = {:.4}; wrote {}",
                outcome.best.n_trees,
                outcome.best.max_depth,
                outcome.best_score,
                model_out.display()
            );
        }
        Command::Predict { model, data, out } => {
            let model = ForestModel::load(model)?;
            let (mut x, y, _header) = read_training_csv(data)?;
            // accept either bare predictors or predictors + target column
            if !x.is_empty() && x[0].len() + 1 == model.n_features {
                for (row, target) in x.iter_mut().zip(&y) {
                    row.push(*target);
                }
            }
            if !x.is_empty() && x[0].len() != model.n_features {
                return Err(Error::InvalidArgument(format!(
                    "model expects {} predictors, data has {}",
                    model.n_features,
                    x[0].len()
                )));
            }
            let mut text = String::from("row,prediction\n");
            for (i, row) in x.iter().enumerate() {
                text.push_str(&format!("{i},{:.6}\n", model.predict_row(row)));
            }
            match out {
                Some(path) => std::fs::write(path, text)
                    .map_err(|e| Error::io(path.display().to_string(), e))?,
                None => print!("{text}"),
            }
        }
        Command::SearchK => {
            let report = run_experiment(&cfg, &cli.out_dir, None)?;
            println!("offset bounds: -{} .. +{}", report.offset_bounds.0, report.offset_bounds.1);
            println!("elbow counts:  {:?}", report.elbow_counts);
            println!("chosen counts: {:?}", report.chosen_counts);
            print_report(&report);
        }
        Command::Report => {
            let report = run_experiment(&cfg, &cli.out_dir, None)?;
            print_report(&report);
        }
        Command::RunAll => {
            let report = run_all(&cfg, &cli.out_dir)?;
            print_report(&report);
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: could not size worker pool: {e}");
            std::process::exit(2);
        }
    }
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
