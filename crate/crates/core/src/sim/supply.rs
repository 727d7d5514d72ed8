//! Steady-state consumer supply under a given set of component outages.
//!
//! Per system, failed and dependency-starved components are removed and a
//! capacitated max-flow is solved from a super-source (all system sources)
//! to a super-sink (one demand arc per consumer). When the feasible total
//! falls short of demand, consumers are rationed: a binary search finds the
//! largest uniform demand fraction the network can serve everyone at, and a
//! final max-flow pass tops up consumers that are not on the saturated
//! cuts. Consumers on the binding cut therefore share shortage in
//! proportion to their demands.

use super::maxflow::{FlowNetwork, FLOW_EPS};
use crate::error::{Error, Result};
use crate::network::{IndexedNetwork, IndexedSystem, SystemKind};
use std::collections::BTreeMap;

/// Which components are currently functional, per system.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationalState {
    pub link_up: BTreeMap<SystemKind, Vec<bool>>,
    pub node_up: BTreeMap<SystemKind, Vec<bool>>,
}

impl OperationalState {
    /// Everything functional.
    pub fn all_up(net: &IndexedNetwork) -> Self {
        let link_up = net
            .systems
            .iter()
            .map(|(k, s)| (*k, vec![true; s.link_count()]))
            .collect();
        let node_up = net
            .systems
            .iter()
            .map(|(k, s)| (*k, vec![true; s.node_count()]))
            .collect();
        OperationalState { link_up, node_up }
    }
}

/// Supply allocation at one instant.
#[derive(Debug, Clone)]
pub struct SupplySnapshot {
    /// Per consumer, per system: delivered resource-units/hour.
    pub supply: Vec<BTreeMap<SystemKind, f64>>,
    /// Per system: signed net flow per link (positive in `from -> to`
    /// direction); zero on non-functional links.
    pub link_flow: BTreeMap<SystemKind, Vec<f64>>,
    /// Worst conservation violation seen across system solves.
    pub conservation_violation: f64,
}

/// Node functionality after applying cross-system dependencies.
///
/// A dependent node functions only while its feed node is functional and
/// connected to at least one source of the feed system through functional
/// components. Evaluated to a fixed point, so chained dependencies settle.
pub fn effective_node_up(
    net: &IndexedNetwork,
    state: &OperationalState,
) -> BTreeMap<SystemKind, Vec<bool>> {
    let mut effective: BTreeMap<SystemKind, Vec<bool>> = state.node_up.clone();
    for _ in 0..=net.dependencies.len() {
        let mut changed = false;
        // connectivity of each system under current effective sets
        let mut source_reach: BTreeMap<SystemKind, Vec<bool>> = BTreeMap::new();
        for (kind, sys) in &net.systems {
            source_reach.insert(
                *kind,
                reachable_from_sources(sys, &effective[kind], &state.link_up[kind]),
            );
        }
        for dep in &net.dependencies {
            let (from_sys, from_node) = dep.from;
            let (to_sys, to_node) = dep.to;
            let feed_ok = effective[&from_sys][from_node] && source_reach[&from_sys][from_node];
            // a pumped node (source or not) goes dark without its feed
            if !feed_ok && effective[&to_sys][to_node] {
                effective.get_mut(&to_sys).unwrap()[to_node] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    effective
}

fn reachable_from_sources(sys: &IndexedSystem, node_up: &[bool], link_up: &[bool]) -> Vec<bool> {
    let mut seen = vec![false; sys.node_count()];
    let mut stack = Vec::new();
    for &s in &sys.sources {
        if node_up[s] && !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for &(e, v) in &sys.adj[u] {
            if link_up[e] && node_up[v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

struct SystemSolve {
    alloc: Vec<f64>,     // per consumer index into `consumers`
    link_flow: Vec<f64>, // per link
    violation: f64,
}

/// Solves one system's allocation given effective functionality.
fn solve_system(
    sys: &IndexedSystem,
    node_up: &[bool],
    link_up: &[bool],
    consumers: &[(usize, usize, f64)], // (consumer idx, attach node, demand)
) -> SystemSolve {
    let n = sys.node_count();
    let source_node = n;
    let sink_node = n + 1;
    let mut alloc = vec![0.0; consumers.len()];
    let mut link_flow = vec![0.0; sys.link_count()];

    // Consumers attached to dead nodes get nothing; the rest enter the flow.
    let live: Vec<(usize, usize, f64)> = consumers
        .iter()
        .copied()
        .filter(|&(_, attach, demand)| node_up[attach] && demand > 0.0)
        .collect();
    let total_demand: f64 = live.iter().map(|&(_, _, d)| d).sum();
    if total_demand <= 0.0 {
        return SystemSolve {
            alloc,
            link_flow,
            violation: 0.0,
        };
    }

    let build = |demand_scale: f64| -> (FlowNetwork, Vec<usize>, Vec<usize>) {
        let mut fnet = FlowNetwork::new(n + 2);
        for &s in &sys.sources {
            if node_up[s] {
                fnet.add_arc(source_node, s, sys.node_capacity[s]);
            }
        }
        let mut link_arcs = vec![usize::MAX; sys.link_count()];
        for e in 0..sys.link_count() {
            let (a, b) = sys.links[e];
            if link_up[e] && node_up[a] && node_up[b] {
                link_arcs[e] = fnet.add_undirected(a, b, sys.link_capacity[e]);
            }
        }
        let consumer_arcs = live
            .iter()
            .map(|&(_, attach, demand)| fnet.add_arc(attach, sink_node, demand * demand_scale))
            .collect();
        (fnet, link_arcs, consumer_arcs)
    };

    let (mut full, link_arcs, consumer_arcs) = build(1.0);
    let max_total = full.max_flow(source_node, sink_node);
    let eps = FLOW_EPS * total_demand.max(1.0);

    let (solved, link_arc_ids, consumer_arc_ids) = if max_total >= total_demand - eps {
        (full, link_arcs, consumer_arcs)
    } else {
        // Largest uniform fraction alpha at which every consumer can be
        // served alpha * demand simultaneously.
        let feasible = |alpha: f64| -> bool {
            let (mut fnet, _, _) = build(alpha);
            let f = fnet.max_flow(source_node, sink_node);
            f >= alpha * total_demand - eps
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Serve the proportional base, then top up whatever headroom the
        // saturated cuts leave for off-cut consumers.
        let (mut fnet, link_arcs, consumer_arcs) = build(lo);
        fnet.max_flow(source_node, sink_node);
        for (arc, &(_, _, demand)) in consumer_arcs.iter().zip(&live) {
            fnet.raise_cap(*arc, demand);
        }
        fnet.max_flow(source_node, sink_node);
        (fnet, link_arcs, consumer_arcs)
    };

    for (arc, &(ci, _, demand)) in consumer_arc_ids.iter().zip(&live) {
        alloc[ci] = solved.flow(*arc).clamp(0.0, demand);
    }
    for e in 0..sys.link_count() {
        if link_arc_ids[e] != usize::MAX {
            link_flow[e] = solved.flow(link_arc_ids[e]);
        }
    }
    SystemSolve {
        alloc,
        link_flow,
        violation: solved.max_conservation_violation(source_node, sink_node),
    }
}

/// Computes consumer supply and link flows for the given operational state.
///
/// Disconnection yields zero supply rather than an error.
pub fn steady_supply(net: &IndexedNetwork, state: &OperationalState) -> Result<SupplySnapshot> {
    for (kind, sys) in &net.systems {
        let links_ok = state
            .link_up
            .get(kind)
            .map(|v| v.len() == sys.link_count())
            .unwrap_or(false);
        let nodes_ok = state
            .node_up
            .get(kind)
            .map(|v| v.len() == sys.node_count())
            .unwrap_or(false);
        if !links_ok || !nodes_ok {
            return Err(Error::InvalidArgument(format!(
                "operational state does not match system `{kind}`"
            )));
        }
    }

    let effective = effective_node_up(net, state);
    let mut supply = vec![BTreeMap::new(); net.consumers.len()];
    let mut link_flow = BTreeMap::new();
    let mut violation = 0.0f64;

    for (kind, sys) in &net.systems {
        let consumers: Vec<(usize, usize, f64)> = net
            .consumers
            .iter()
            .enumerate()
            .filter_map(|(ci, c)| {
                let attach = c.attach.get(kind)?;
                let demand = c.demand.get(kind).copied().unwrap_or(0.0);
                Some((ci, *attach, demand))
            })
            .collect();
        let solve = solve_system(sys, &effective[kind], &state.link_up[kind], &consumers);
        for &(ci, _, _) in &consumers {
            supply[ci].insert(*kind, solve.alloc[ci]);
        }
        // consumers with zero or missing demand still get explicit zeros
        for (ci, c) in net.consumers.iter().enumerate() {
            if c.attach.contains_key(kind) {
                supply[ci].entry(*kind).or_insert(0.0);
            }
        }
        violation = violation.max(solve.violation);
        link_flow.insert(*kind, solve.link_flow);
    }

    Ok(SupplySnapshot {
        supply,
        link_flow,
        conservation_violation: violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_synthetic_testbed, IndexedNetwork, TestbedConfig};

    fn testbed() -> IndexedNetwork {
        let cfg = TestbedConfig {
            rows: 5,
            cols: 5,
            ..TestbedConfig::default()
        };
        IndexedNetwork::build(&build_synthetic_testbed(&cfg, 11).unwrap()).unwrap()
    }

    #[test]
    fn no_failures_serves_every_demand() {
        let net = testbed();
        let snapshot = steady_supply(&net, &OperationalState::all_up(&net)).unwrap();
        for (consumer, got) in net.consumers.iter().zip(&snapshot.supply) {
            for (kind, demand) in &consumer.demand {
                let s = got.get(kind).copied().unwrap_or(0.0);
                assert!(
                    (s - demand).abs() < 1e-6,
                    "{} {kind}: supply {s} != demand {demand}",
                    consumer.id
                );
            }
        }
        assert!(snapshot.conservation_violation < 1e-9);
    }

    #[test]
    fn cutting_all_paths_zeroes_supply() {
        let net = testbed();
        let mut state = OperationalState::all_up(&net);
        // sever the power substation from everything
        let sys = &net.systems[&SystemKind::Power];
        let substation = sys.sources[0];
        let up = state.link_up.get_mut(&SystemKind::Power).unwrap();
        for &(e, _) in &sys.adj[substation] {
            up[e] = false;
        }
        let snapshot = steady_supply(&net, &state).unwrap();
        for (consumer, got) in net.consumers.iter().zip(&snapshot.supply) {
            let s = got.get(&SystemKind::Power).copied().unwrap_or(0.0);
            if consumer.attach[&SystemKind::Power] == substation {
                // tapping the substation bus directly keeps this consumer up
                assert!(s > 0.0);
            } else {
                assert_eq!(s, 0.0, "consumer {}", consumer.id);
            }
        }
    }

    #[test]
    fn pump_dependency_drops_pumped_source() {
        let net = testbed();
        let mut state = OperationalState::all_up(&net);
        // cut power entirely: pumped water source and booster go dark,
        // leaving only the gravity tank
        let sys = &net.systems[&SystemKind::Power];
        let substation = sys.sources[0];
        let up = state.link_up.get_mut(&SystemKind::Power).unwrap();
        for &(e, _) in &sys.adj[substation] {
            up[e] = false;
        }
        let effective = effective_node_up(&net, &state);
        let water = &net.systems[&SystemKind::Water];
        let well = water.sources[1];
        assert!(!effective[&SystemKind::Water][well]);
        // gravity tank unaffected
        assert!(effective[&SystemKind::Water][water.sources[0]]);
    }

    #[test]
    fn shortage_rations_proportionally_on_the_cut() {
        // source - a - b chain where the a-b main is the bottleneck for two
        // downstream consumers with unequal demands
        use crate::network::{
            Consumer, InfraNetwork, Link, Node, SystemGraph, SystemKind, Zone,
        };
        use std::collections::BTreeMap as Map;
        let nodes = |ids: &[(&str, f64, f64)]| -> Vec<Node> {
            ids.iter()
                .map(|(id, x, y)| Node {
                    id: (*id).into(),
                    x: *x,
                    y: *y,
                    zone: Zone::Residential,
                    capacity: 100.0,
                })
                .collect()
        };
        let sys = SystemGraph {
            kind: SystemKind::Water,
            nodes: nodes(&[
                ("water:node:s", 0.0, 0.0),
                ("water:node:a", 100.0, 0.0),
                ("water:node:b", 200.0, 0.0),
            ]),
            links: vec![
                Link {
                    id: "water:link:s-a".into(),
                    from: "water:node:s".into(),
                    to: "water:node:a".into(),
                    capacity: 100.0,
                    length_m: 100.0,
                },
                Link {
                    id: "water:link:a-b".into(),
                    from: "water:node:a".into(),
                    to: "water:node:b".into(),
                    capacity: 6.0,
                    length_m: 100.0,
                },
            ],
            sources: vec!["water:node:s".into()],
        };
        let consumers = vec![
            Consumer {
                id: "c-big".into(),
                attachments: Map::from([(SystemKind::Water, "water:node:b".into())]),
                demands: Map::from([(SystemKind::Water, 8.0)]),
                priority: 1.0,
            },
            Consumer {
                id: "c-small".into(),
                attachments: Map::from([(SystemKind::Water, "water:node:b".into())]),
                demands: Map::from([(SystemKind::Water, 4.0)]),
                priority: 1.0,
            },
        ];
        let net = InfraNetwork {
            systems: Map::from([(SystemKind::Water, sys)]),
            dependencies: vec![],
            consumers,
            stream_polyline: vec![[0.0, 0.0], [1.0, 0.0]],
        };
        let indexed = IndexedNetwork::build(&net).unwrap();
        let snapshot = steady_supply(&indexed, &OperationalState::all_up(&indexed)).unwrap();
        // bottleneck 6 over total demand 12: both rationed to half
        let big = snapshot.supply[0][&SystemKind::Water];
        let small = snapshot.supply[1][&SystemKind::Water];
        assert!((big - 4.0).abs() < 1e-6, "big = {big}");
        assert!((small - 2.0).abs() < 1e-6, "small = {small}");
    }
}
