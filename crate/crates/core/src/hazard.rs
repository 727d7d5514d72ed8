//! Synthetic flood scenario generation.
//!
//! Components fail independently with a probability that decays
//! exponentially in their Euclidean distance from the stream polyline;
//! scenarios exceeding the failure cap keep only the failures nearest the
//! stream. Only links are failure-eligible by default.

use crate::error::{Error, Result};
use crate::geometry::point_polyline_distance;
use crate::network::{IndexedNetwork, SystemKind};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

/// Hazard model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HazardConfig {
    /// Failure probability at distance zero from the stream, in (0, 1].
    pub p0: f64,
    /// Exponential decay length in meters.
    pub decay_length_m: f64,
    /// Hard cap on failures per scenario.
    pub max_failures: usize,
    /// Number of scenarios to generate.
    pub scenario_count: usize,
    /// Per-scenario intensity multipliers, cycled over the scenario index.
    pub intensities: Vec<f64>,
    /// Systems whose links may fail.
    pub eligible_link_systems: Vec<SystemKind>,
    /// Systems whose nodes may fail (off by default).
    pub eligible_node_systems: Vec<SystemKind>,
    /// Redraw attempts before giving up on an all-survive scenario.
    pub max_redraws: usize,
}

impl Default for HazardConfig {
    fn default() -> Self {
        HazardConfig {
            p0: 0.25,
            decay_length_m: 120.0,
            max_failures: 35,
            scenario_count: 325,
            intensities: vec![0.5, 1.0, 1.5],
            eligible_link_systems: SystemKind::ALL.to_vec(),
            eligible_node_systems: Vec::new(),
            max_redraws: 200,
        }
    }
}

impl HazardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return Err(Error::Config(format!("hazard p0 must be in (0, 1], got {}", self.p0)));
        }
        if !(self.decay_length_m > 0.0) {
            return Err(Error::Config("hazard decay_length_m must be > 0".into()));
        }
        if self.max_failures < 1 {
            return Err(Error::Config("hazard max_failures must be >= 1".into()));
        }
        if self.scenario_count == 0 {
            return Err(Error::Config("hazard scenario_count must be >= 1".into()));
        }
        if self.intensities.is_empty() || self.intensities.iter().any(|i| !(*i > 0.0)) {
            return Err(Error::Config("hazard intensities must be positive".into()));
        }
        Ok(())
    }
}

/// One hazard realization: the failed component sets per system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub failed_links: BTreeMap<SystemKind, Vec<String>>,
    pub failed_nodes: BTreeMap<SystemKind, Vec<String>>,
    pub intensity: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn total_failures(&self) -> usize {
        self.failed_links.values().map(Vec::len).sum::<usize>()
            + self.failed_nodes.values().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.total_failures() == 0
    }
}

/// A failure-eligible component with its hazard geometry resolved.
#[derive(Debug, Clone)]
struct EligibleComponent {
    system: SystemKind,
    id: String,
    is_link: bool,
    distance_m: f64,
    probability: f64,
}

/// Failure probability of a component: `p0 * exp(-d / decay_length)` where
/// `d` is the minimum Euclidean distance from the component's geometry to
/// the stream (links are located at their segment midpoint).
pub fn component_failure_probability(distance_m: f64, cfg: &HazardConfig) -> f64 {
    cfg.p0 * (-distance_m / cfg.decay_length_m).exp()
}

fn eligible_components(net: &IndexedNetwork, cfg: &HazardConfig) -> Vec<EligibleComponent> {
    let mut out = Vec::new();
    for kind in SystemKind::ALL {
        let Some(sys) = net.systems.get(&kind) else {
            continue;
        };
        if cfg.eligible_link_systems.contains(&kind) {
            for e in 0..sys.link_count() {
                let d = point_polyline_distance(&sys.link_midpoint(e), &net.stream_polyline);
                out.push(EligibleComponent {
                    system: kind,
                    id: sys.link_ids[e].clone(),
                    is_link: true,
                    distance_m: d,
                    probability: component_failure_probability(d, cfg),
                });
            }
        }
        if cfg.eligible_node_systems.contains(&kind) {
            for v in 0..sys.node_count() {
                let d = point_polyline_distance(&sys.node_pos[v], &net.stream_polyline);
                out.push(EligibleComponent {
                    system: kind,
                    id: sys.node_ids[v].clone(),
                    is_link: false,
                    distance_m: d,
                    probability: component_failure_probability(d, cfg),
                });
            }
        }
    }
    out
}

/// Generates `cfg.scenario_count` scenarios, deterministic in
/// `(net, cfg, seed)`.
///
/// Each eligible component fails independently with its distance-decayed
/// probability scaled by the scenario intensity. Scenarios with zero
/// failures are redrawn (bounded); failure sets larger than the cap keep
/// the `max_failures` components nearest to the stream.
pub fn generate_scenarios(
    net: &IndexedNetwork,
    cfg: &HazardConfig,
    seed: u64,
) -> Result<Vec<Scenario>> {
    cfg.validate()?;
    if net.stream_polyline.is_empty() {
        return Err(Error::Hazard("network has no stream polyline".into()));
    }
    let eligible = eligible_components(net, cfg);
    if eligible.is_empty() {
        return Err(Error::Hazard(
            "hazard config admits no eligible components".into(),
        ));
    }

    let mut scenarios = Vec::with_capacity(cfg.scenario_count);
    for i in 0..cfg.scenario_count {
        let intensity = cfg.intensities[i % cfg.intensities.len()];
        let scenario_seed = rng::mix(seed, i as u64);
        let mut draw_rng = rng::rng(scenario_seed);

        let mut failed: Vec<&EligibleComponent> = Vec::new();
        let mut attempts = 0;
        while failed.is_empty() {
            attempts += 1;
            if attempts > cfg.max_redraws {
                return Err(Error::Hazard(format!(
                    "scenario {i} drew no failures after {} attempts; hazard too weak",
                    cfg.max_redraws
                )));
            }
            for comp in &eligible {
                let p = (comp.probability * intensity).min(1.0);
                if draw_rng.gen::<f64>() < p {
                    failed.push(comp);
                }
            }
        }

        if failed.len() > cfg.max_failures {
            failed.sort_by(|a, b| {
                a.distance_m
                    .total_cmp(&b.distance_m)
                    .then_with(|| a.id.cmp(&b.id))
            });
            failed.truncate(cfg.max_failures);
        }

        let mut failed_links: BTreeMap<SystemKind, Vec<String>> = BTreeMap::new();
        let mut failed_nodes: BTreeMap<SystemKind, Vec<String>> = BTreeMap::new();
        for comp in failed {
            let entry = if comp.is_link {
                failed_links.entry(comp.system).or_default()
            } else {
                failed_nodes.entry(comp.system).or_default()
            };
            entry.push(comp.id.clone());
        }
        for list in failed_links.values_mut().chain(failed_nodes.values_mut()) {
            list.sort();
        }

        scenarios.push(Scenario {
            id: format!("scen-{i:05}"),
            failed_links,
            failed_nodes,
            intensity,
            seed: scenario_seed,
        });
    }
    Ok(scenarios)
}

/// Writes scenarios as JSON lines, one scenario per line.
pub fn save_scenarios(path: &Path, scenarios: &[Scenario]) -> Result<()> {
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    for s in scenarios {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_synthetic_testbed, IndexedNetwork, TestbedConfig};

    fn small_net() -> IndexedNetwork {
        let cfg = TestbedConfig {
            rows: 6,
            cols: 6,
            ..TestbedConfig::default()
        };
        IndexedNetwork::build(&build_synthetic_testbed(&cfg, 3).unwrap()).unwrap()
    }

    #[test]
    fn probability_examples() {
        let cfg = HazardConfig {
            p0: 0.8,
            decay_length_m: 200.0,
            ..HazardConfig::default()
        };
        assert_eq!(component_failure_probability(0.0, &cfg), 0.8);
        assert!(component_failure_probability(1e9, &cfg) < 1e-300);
        let p = component_failure_probability(200.0, &cfg);
        assert!((p - 0.8 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((p - 0.2943).abs() < 1e-4);
    }

    #[test]
    fn scenario_count_and_cap_hold() {
        let net = small_net();
        let cfg = HazardConfig::default();
        let scenarios = generate_scenarios(&net, &cfg, 99).unwrap();
        assert_eq!(scenarios.len(), 325);
        for s in &scenarios {
            assert!(s.total_failures() >= 1);
            assert!(s.total_failures() <= 35);
            assert!(s.failed_nodes.is_empty());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let net = small_net();
        let cfg = HazardConfig {
            scenario_count: 20,
            ..HazardConfig::default()
        };
        let a = generate_scenarios(&net, &cfg, 5).unwrap();
        let b = generate_scenarios(&net, &cfg, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_hazard_is_an_error() {
        let net = small_net();
        // p0 tiny and decay tiny: effectively zero probability everywhere,
        // so every scenario exhausts its redraws
        let cfg = HazardConfig {
            p0: 1e-12,
            decay_length_m: 1e-6,
            scenario_count: 1,
            max_redraws: 10,
            ..HazardConfig::default()
        };
        assert!(matches!(
            generate_scenarios(&net, &cfg, 1),
            Err(Error::Hazard(_))
        ));
        let zero = HazardConfig {
            p0: 0.0,
            ..HazardConfig::default()
        };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn no_eligible_components_is_an_error() {
        let net = small_net();
        let cfg = HazardConfig {
            eligible_link_systems: vec![],
            ..HazardConfig::default()
        };
        assert!(matches!(
            generate_scenarios(&net, &cfg, 1),
            Err(Error::Hazard(_))
        ));
    }

    #[test]
    fn scenario_jsonl_round_trip() {
        let net = small_net();
        let cfg = HazardConfig {
            scenario_count: 8,
            ..HazardConfig::default()
        };
        let scenarios = generate_scenarios(&net, &cfg, 6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scen.jsonl");
        save_scenarios(&path, &scenarios).unwrap();
        let back = load_scenarios(&path).unwrap();
        assert_eq!(scenarios, back);
    }
}
