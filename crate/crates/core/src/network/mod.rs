//! Interdependent infrastructure network data model.
//!
//! An [`InfraNetwork`] bundles one graph per infrastructure system
//! (power, water, transport), cross-system dependency links, the consumers
//! drawing from the systems, and the stream polyline used by the hazard
//! module. Networks are immutable after construction and safe to share
//! across worker threads; all per-scenario mutation lives in the simulator.
//!
//! Component identifiers are globally unique strings shaped
//! `<system>:<node|link>:<local-id>`.

mod testbed;

pub use testbed::{build_synthetic_testbed, TestbedConfig};

use crate::error::{Error, Result};
use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

/// The three infrastructure systems. Ordering is the canonical order used
/// everywhere a deterministic system sequence is needed (serialization,
/// weight vectors, one-hot encodings).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Power,
    Water,
    Transport,
}

impl SystemKind {
    pub const ALL: [SystemKind; 3] = [SystemKind::Power, SystemKind::Water, SystemKind::Transport];

    pub fn as_str(&self) -> &'static str {
        match self {
            SystemKind::Power => "power",
            SystemKind::Water => "water",
            SystemKind::Transport => "transport",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(SystemKind::Power),
            "water" => Ok(SystemKind::Water),
            "transport" => Ok(SystemKind::Transport),
            other => Err(Error::InvalidArgument(format!(
                "unknown system kind `{other}`"
            ))),
        }
    }
}

/// Land-use zone of a node, used by the zone-based repair strategy.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Cbd,
    Industrial,
    Residential,
}

impl Zone {
    /// Repair precedence: CBD before industrial before residential.
    pub fn priority_rank(&self) -> u8 {
        match self {
            Zone::Cbd => 0,
            Zone::Industrial => 1,
            Zone::Residential => 2,
        }
    }
}

/// A producer, consumer tap, or transfer point in one system graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    /// Planar coordinates in meters.
    pub x: f64,
    pub y: f64,
    pub zone: Zone,
    /// For source nodes this is the maximum supply rate
    /// (resource-units/hour); for other nodes it is informational headroom.
    pub capacity: f64,
}

impl Node {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// An undirected link between two nodes of the same system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Throughput limit in resource-units/hour (vehicles/hour for roads).
    pub capacity: f64,
    /// Physical length in meters.
    pub length_m: f64,
}

/// One infrastructure system represented as an undirected graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemGraph {
    pub kind: SystemKind,
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    /// Node ids acting as supply points; their `capacity` is the supply cap.
    pub sources: Vec<String>,
}

impl SystemGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

/// A consumer drawing resources from one or more systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consumer {
    pub id: String,
    /// Node the consumer taps, per system it draws from.
    pub attachments: BTreeMap<SystemKind, String>,
    /// Demand per system in resource-units/hour.
    pub demands: BTreeMap<SystemKind, f64>,
    pub priority: f64,
}

/// A directed cross-system functional dependency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyLink {
    pub from_system: SystemKind,
    pub from_node: String,
    pub to_system: SystemKind,
    pub to_node: String,
    /// Dependency kind tag, e.g. `pump-power-feed`.
    pub kind: String,
}

/// The interdependent multi-system network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfraNetwork {
    pub systems: BTreeMap<SystemKind, SystemGraph>,
    pub dependencies: Vec<DependencyLink>,
    pub consumers: Vec<Consumer>,
    /// Polyline of the stream used for hazard distance, as `[x, y]` meters.
    pub stream_polyline: Vec<[f64; 2]>,
}

impl InfraNetwork {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }
}

/// One invariant violation found by [`validate_network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Stable machine-readable code, e.g. `duplicate-id`.
    pub code: String,
    /// The offending component or consumer id.
    pub subject: String,
    pub message: String,
}

impl Violation {
    fn new(code: &str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            code: code.to_string(),
            subject: subject.into(),
            message: message.into(),
        }
    }
}

/// Outcome of validating a network; empty means valid. Violations are data,
/// not failures.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every structural invariant of the data model and returns the full
/// list of violations.
pub fn validate_network(net: &InfraNetwork) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen_ids: HashSet<&str> = HashSet::new();

    for (kind, sys) in &net.systems {
        if sys.kind != *kind {
            report.violations.push(Violation::new(
                "kind-mismatch",
                kind.as_str(),
                format!("system stored under key `{kind}` declares kind `{}`", sys.kind),
            ));
        }
        let mut node_ids: HashSet<&str> = HashSet::new();
        for node in &sys.nodes {
            if !seen_ids.insert(&node.id) {
                report.violations.push(Violation::new(
                    "duplicate-id",
                    &node.id,
                    "component id occurs more than once",
                ));
            }
            node_ids.insert(&node.id);
            if !(node.capacity > 0.0) || !node.capacity.is_finite() {
                report.violations.push(Violation::new(
                    "bad-capacity",
                    &node.id,
                    format!("node capacity must be finite and > 0, got {}", node.capacity),
                ));
            }
            if !node.x.is_finite() || !node.y.is_finite() {
                report.violations.push(Violation::new(
                    "bad-coordinates",
                    &node.id,
                    "node coordinates must be finite",
                ));
            }
        }
        let mut pairs: HashSet<(&str, &str)> = HashSet::new();
        for link in &sys.links {
            if !seen_ids.insert(&link.id) {
                report.violations.push(Violation::new(
                    "duplicate-id",
                    &link.id,
                    "component id occurs more than once",
                ));
            }
            for end in [&link.from, &link.to] {
                if !node_ids.contains(end.as_str()) {
                    report.violations.push(Violation::new(
                        "dangling-endpoint",
                        &link.id,
                        format!("link endpoint `{end}` is not a node of system `{kind}`"),
                    ));
                }
            }
            if link.from == link.to {
                report.violations.push(Violation::new(
                    "self-loop",
                    &link.id,
                    "links may not connect a node to itself",
                ));
            }
            let key = if link.from <= link.to {
                (link.from.as_str(), link.to.as_str())
            } else {
                (link.to.as_str(), link.from.as_str())
            };
            if !pairs.insert(key) {
                report.violations.push(Violation::new(
                    "parallel-link",
                    &link.id,
                    "at most one link per unordered node pair",
                ));
            }
            if !(link.capacity > 0.0) || !link.capacity.is_finite() {
                report.violations.push(Violation::new(
                    "bad-capacity",
                    &link.id,
                    format!("link capacity must be finite and > 0, got {}", link.capacity),
                ));
            }
            if !(link.length_m > 0.0) || !link.length_m.is_finite() {
                report.violations.push(Violation::new(
                    "bad-length",
                    &link.id,
                    format!("link length must be finite and > 0, got {}", link.length_m),
                ));
            }
        }
        if sys.sources.is_empty() {
            report.violations.push(Violation::new(
                "no-source",
                kind.as_str(),
                "every system needs at least one source node",
            ));
        }
        for src in &sys.sources {
            if !node_ids.contains(src.as_str()) {
                report.violations.push(Violation::new(
                    "dangling-source",
                    src,
                    format!("source `{src}` is not a node of system `{kind}`"),
                ));
            }
        }
        if !sys.nodes.is_empty() && !system_is_connected(sys) {
            report.violations.push(Violation::new(
                "disconnected",
                kind.as_str(),
                format!("system `{kind}` is not connected under no-failure conditions"),
            ));
        }
    }

    for dep in &net.dependencies {
        if dep.from_system == dep.to_system {
            report.violations.push(Violation::new(
                "same-system-dependency",
                &dep.from_node,
                "dependency links must connect distinct systems",
            ));
        }
        for (sys, node) in [
            (dep.from_system, &dep.from_node),
            (dep.to_system, &dep.to_node),
        ] {
            let exists = net
                .systems
                .get(&sys)
                .map(|g| g.nodes.iter().any(|n| &n.id == node))
                .unwrap_or(false);
            if !exists {
                report.violations.push(Violation::new(
                    "dangling-dependency",
                    node,
                    format!("dependency endpoint `{node}` is not a node of system `{sys}`"),
                ));
            }
        }
    }

    let mut consumer_ids: HashSet<&str> = HashSet::new();
    for consumer in &net.consumers {
        if !consumer_ids.insert(&consumer.id) {
            report.violations.push(Violation::new(
                "duplicate-consumer",
                &consumer.id,
                "consumer id occurs more than once",
            ));
        }
        if consumer.attachments.is_empty() {
            report.violations.push(Violation::new(
                "no-attachment",
                &consumer.id,
                "consumers must attach to at least one system",
            ));
        }
        for (sys, node) in &consumer.attachments {
            let exists = net
                .systems
                .get(sys)
                .map(|g| g.nodes.iter().any(|n| &n.id == node))
                .unwrap_or(false);
            if !exists {
                report.violations.push(Violation::new(
                    "dangling-attachment",
                    &consumer.id,
                    format!("attachment `{node}` is not a node of system `{sys}`"),
                ));
            }
        }
        for (sys, demand) in &consumer.demands {
            if !demand.is_finite() || *demand < 0.0 {
                report.violations.push(Violation::new(
                    "bad-demand",
                    &consumer.id,
                    format!("demand for `{sys}` must be finite and >= 0, got {demand}"),
                ));
            }
            if !consumer.attachments.contains_key(sys) {
                report.violations.push(Violation::new(
                    "demand-without-attachment",
                    &consumer.id,
                    format!("consumer demands `{sys}` but has no attachment there"),
                ));
            }
        }
        if !consumer.priority.is_finite() || consumer.priority < 0.0 {
            report.violations.push(Violation::new(
                "bad-priority",
                &consumer.id,
                "priority weight must be finite and >= 0",
            ));
        }
    }

    report
}

fn system_is_connected(sys: &SystemGraph) -> bool {
    let index: HashMap<&str, usize> = sys
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let mut adj = vec![Vec::new(); sys.nodes.len()];
    for link in &sys.links {
        if let (Some(&a), Some(&b)) = (index.get(link.from.as_str()), index.get(link.to.as_str()))
        {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; sys.nodes.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == sys.nodes.len()
}

/// Adjacency set of `node_id` in a system graph.
pub fn neighbors(g: &SystemGraph, node_id: &str) -> Result<BTreeSet<String>> {
    if g.node(node_id).is_none() {
        return Err(Error::UnknownComponent(node_id.to_string()));
    }
    let mut out = BTreeSet::new();
    for link in &g.links {
        if link.from == node_id {
            out.insert(link.to.clone());
        } else if link.to == node_id {
            out.insert(link.from.clone());
        }
    }
    Ok(out)
}

/// Index-based view of one system, for algorithms that want dense ids.
#[derive(Debug, Clone)]
pub struct IndexedSystem {
    pub kind: SystemKind,
    pub node_ids: Vec<String>,
    pub node_pos: Vec<Point>,
    pub node_zone: Vec<Zone>,
    pub node_capacity: Vec<f64>,
    pub links: Vec<(usize, usize)>,
    pub link_ids: Vec<String>,
    pub link_capacity: Vec<f64>,
    pub link_length: Vec<f64>,
    /// Per node: `(link index, neighbor node index)` pairs.
    pub adj: Vec<Vec<(usize, usize)>>,
    pub sources: Vec<usize>,
    node_lookup: HashMap<String, usize>,
    link_lookup: HashMap<String, usize>,
}

impl IndexedSystem {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn link_count(&self) -> usize {
        self.link_ids.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_lookup.get(id).copied()
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.link_lookup.get(id).copied()
    }

    /// Midpoint of a link, the reference point for hazard distance and
    /// repair-crew travel targets.
    pub fn link_midpoint(&self, link: usize) -> Point {
        let (a, b) = self.links[link];
        self.node_pos[a].midpoint(&self.node_pos[b])
    }
}

#[derive(Debug, Clone)]
pub struct IndexedConsumer {
    pub id: String,
    pub priority: f64,
    pub attach: BTreeMap<SystemKind, usize>,
    pub demand: BTreeMap<SystemKind, f64>,
}

#[derive(Debug, Clone)]
pub struct IndexedDependency {
    pub from: (SystemKind, usize),
    pub to: (SystemKind, usize),
    pub kind: String,
}

/// Dense-index view of an [`InfraNetwork`]; construction fails on dangling
/// references (run [`validate_network`] first for a full report).
#[derive(Debug, Clone)]
pub struct IndexedNetwork {
    pub systems: BTreeMap<SystemKind, IndexedSystem>,
    pub consumers: Vec<IndexedConsumer>,
    pub dependencies: Vec<IndexedDependency>,
    pub stream_polyline: Vec<[f64; 2]>,
}

impl IndexedNetwork {
    pub fn build(net: &InfraNetwork) -> Result<Self> {
        let mut systems = BTreeMap::new();
        for (kind, sys) in &net.systems {
            let mut node_lookup = HashMap::new();
            let mut node_ids = Vec::with_capacity(sys.nodes.len());
            let mut node_pos = Vec::with_capacity(sys.nodes.len());
            let mut node_zone = Vec::with_capacity(sys.nodes.len());
            let mut node_capacity = Vec::with_capacity(sys.nodes.len());
            for (i, node) in sys.nodes.iter().enumerate() {
                if node_lookup.insert(node.id.clone(), i).is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate node id `{}`",
                        node.id
                    )));
                }
                node_ids.push(node.id.clone());
                node_pos.push(node.position());
                node_zone.push(node.zone);
                node_capacity.push(node.capacity);
            }
            let mut link_lookup = HashMap::new();
            let mut links = Vec::with_capacity(sys.links.len());
            let mut link_ids = Vec::with_capacity(sys.links.len());
            let mut link_capacity = Vec::with_capacity(sys.links.len());
            let mut link_length = Vec::with_capacity(sys.links.len());
            let mut adj = vec![Vec::new(); sys.nodes.len()];
            for (i, link) in sys.links.iter().enumerate() {
                let a = *node_lookup
                    .get(&link.from)
                    .ok_or_else(|| Error::UnknownComponent(link.from.clone()))?;
                let b = *node_lookup
                    .get(&link.to)
                    .ok_or_else(|| Error::UnknownComponent(link.to.clone()))?;
                if link_lookup.insert(link.id.clone(), i).is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate link id `{}`",
                        link.id
                    )));
                }
                links.push((a, b));
                link_ids.push(link.id.clone());
                link_capacity.push(link.capacity);
                link_length.push(link.length_m);
                adj[a].push((i, b));
                adj[b].push((i, a));
            }
            let sources = sys
                .sources
                .iter()
                .map(|s| {
                    node_lookup
                        .get(s)
                        .copied()
                        .ok_or_else(|| Error::UnknownComponent(s.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            systems.insert(
                *kind,
                IndexedSystem {
                    kind: *kind,
                    node_ids,
                    node_pos,
                    node_zone,
                    node_capacity,
                    links,
                    link_ids,
                    link_capacity,
                    link_length,
                    adj,
                    sources,
                    node_lookup,
                    link_lookup,
                },
            );
        }

        let consumers = net
            .consumers
            .iter()
            .map(|c| {
                let mut attach = BTreeMap::new();
                for (kind, node) in &c.attachments {
                    let sys = systems
                        .get(kind)
                        .ok_or_else(|| Error::UnknownComponent(node.clone()))?;
                    let idx = sys
                        .node_index(node)
                        .ok_or_else(|| Error::UnknownComponent(node.clone()))?;
                    attach.insert(*kind, idx);
                }
                Ok(IndexedConsumer {
                    id: c.id.clone(),
                    priority: c.priority,
                    attach,
                    demand: c.demands.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let dependencies = net
            .dependencies
            .iter()
            .map(|d| {
                let from_sys = systems
                    .get(&d.from_system)
                    .ok_or_else(|| Error::UnknownComponent(d.from_node.clone()))?;
                let from = from_sys
                    .node_index(&d.from_node)
                    .ok_or_else(|| Error::UnknownComponent(d.from_node.clone()))?;
                let to_sys = systems
                    .get(&d.to_system)
                    .ok_or_else(|| Error::UnknownComponent(d.to_node.clone()))?;
                let to = to_sys
                    .node_index(&d.to_node)
                    .ok_or_else(|| Error::UnknownComponent(d.to_node.clone()))?;
                Ok(IndexedDependency {
                    from: (d.from_system, from),
                    to: (d.to_system, to),
                    kind: d.kind.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(IndexedNetwork {
            systems,
            consumers,
            dependencies,
            stream_polyline: net.stream_polyline.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_system() -> SystemGraph {
        SystemGraph {
            kind: SystemKind::Water,
            nodes: vec![
                Node {
                    id: "water:node:a".into(),
                    x: 0.0,
                    y: 0.0,
                    zone: Zone::Residential,
                    capacity: 10.0,
                },
                Node {
                    id: "water:node:b".into(),
                    x: 100.0,
                    y: 0.0,
                    zone: Zone::Residential,
                    capacity: 10.0,
                },
            ],
            links: vec![Link {
                id: "water:link:a-b".into(),
                from: "water:node:a".into(),
                to: "water:node:b".into(),
                capacity: 5.0,
                length_m: 100.0,
            }],
            sources: vec!["water:node:a".into()],
        }
    }

    fn tiny_network() -> InfraNetwork {
        let mut systems = BTreeMap::new();
        systems.insert(SystemKind::Water, tiny_system());
        InfraNetwork {
            systems,
            dependencies: vec![],
            consumers: vec![Consumer {
                id: "consumer:b".into(),
                attachments: BTreeMap::from([(SystemKind::Water, "water:node:b".into())]),
                demands: BTreeMap::from([(SystemKind::Water, 4.0)]),
                priority: 1.0,
            }],
            stream_polyline: vec![[0.0, 50.0], [100.0, 50.0]],
        }
    }

    #[test]
    fn well_formed_network_has_empty_report() {
        let report = validate_network(&tiny_network());
        assert!(report.is_valid(), "unexpected violations: {:?}", report);
    }

    #[test]
    fn dangling_dependency_is_reported() {
        let mut net = tiny_network();
        net.dependencies.push(DependencyLink {
            from_system: SystemKind::Power,
            from_node: "power:node:missing".into(),
            to_system: SystemKind::Water,
            to_node: "water:node:b".into(),
            kind: "pump-power-feed".into(),
        });
        let report = validate_network(&net);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].code, "dangling-dependency");
        assert_eq!(report.violations[0].subject, "power:node:missing");
    }

    #[test]
    fn duplicate_component_id_is_reported() {
        let mut net = tiny_network();
        let dup = net.systems.get_mut(&SystemKind::Water).unwrap();
        let mut clone = dup.nodes[0].clone();
        clone.x += 1.0;
        dup.nodes.push(clone);
        // re-link so connectivity still holds for the duplicated node entry
        dup.links.push(Link {
            id: "water:link:a-a2".into(),
            from: "water:node:a".into(),
            to: "water:node:b".into(),
            capacity: 1.0,
            length_m: 1.0,
        });
        let report = validate_network(&net);
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == "duplicate-id" && v.subject == "water:node:a"));
    }

    #[test]
    fn neighbors_basics() {
        let mut sys = tiny_system();
        sys.nodes.push(Node {
            id: "water:node:c".into(),
            x: 200.0,
            y: 0.0,
            zone: Zone::Residential,
            capacity: 10.0,
        });
        sys.links.push(Link {
            id: "water:link:b-c".into(),
            from: "water:node:b".into(),
            to: "water:node:c".into(),
            capacity: 5.0,
            length_m: 100.0,
        });
        let n = neighbors(&sys, "water:node:b").unwrap();
        assert_eq!(
            n,
            BTreeSet::from(["water:node:a".to_string(), "water:node:c".to_string()])
        );
        assert!(neighbors(&sys, "water:node:zz").is_err());
    }

    #[test]
    fn neighbors_of_isolated_node_is_empty() {
        let mut sys = tiny_system();
        sys.nodes.push(Node {
            id: "water:node:alone".into(),
            x: 500.0,
            y: 500.0,
            zone: Zone::Residential,
            capacity: 1.0,
        });
        assert!(neighbors(&sys, "water:node:alone").unwrap().is_empty());
    }

    #[test]
    fn json_round_trip_is_structural_identity() {
        let net = tiny_network();
        let text = net.to_json().unwrap();
        let back = InfraNetwork::from_json(&text).unwrap();
        assert_eq!(net, back);
    }
}
