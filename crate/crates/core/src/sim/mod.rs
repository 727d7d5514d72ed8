//! Flow-and-recovery simulation.
//!
//! [`Simulator::simulate`] applies a hazard scenario to the network,
//! schedules repair crews under a chosen strategy, and produces per-system
//! PCS step functions plus equivalent-outage-hour metrics.
//!
//! Timeline semantics: failures take effect at `t = 0`. Failed water links
//! leak until remote valve isolation completes ten minutes in (configurable);
//! in this surrogate a leaking main is as non-functional as an isolated one,
//! so isolation gates when water repairs may start rather than changing
//! flows. Crews travel on the operational road graph at constant speed
//! (failed road links are impassable and reopen as they are repaired) and
//! repair one component at a time. A repaired component is restored only
//! when no adjacent same-system component is still failed, mirroring
//! valve-reopen/breaker-close interference rules.

mod maxflow;
mod supply;

pub use maxflow::{FlowNetwork, FLOW_EPS};
pub use supply::{effective_node_up, steady_supply, OperationalState, SupplySnapshot};

use crate::error::{Error, Result};
use crate::features::{betweenness_centrality, SimpleGraph};
use crate::geometry::Point;
use crate::hazard::Scenario;
use crate::network::{IndexedNetwork, SystemKind};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BinaryHeap};

/// Repair-ordering strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Higher link betweenness first.
    Betweenness,
    /// Larger baseline resource flow first.
    Maxflow,
    /// CBD, then industrial, then residential.
    Zone,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Betweenness, Strategy::Maxflow, Strategy::Zone];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Betweenness => "betweenness",
            Strategy::Maxflow => "maxflow",
            Strategy::Zone => "zone",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "betweenness" => Ok(Strategy::Betweenness),
            "maxflow" => Ok(Strategy::Maxflow),
            "zone" => Ok(Strategy::Zone),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy `{other}` (expected betweenness|maxflow|zone)"
            ))),
        }
    }
}

/// Crew and repair-time parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrewConfig {
    /// Travel speed on roads, meters per hour.
    pub speed_m_per_hr: f64,
    /// Repair duration per component of each system, hours.
    pub repair_hours: BTreeMap<SystemKind, f64>,
    /// Delay before failed water mains are remotely isolated, hours.
    pub isolation_delay_hr: f64,
    /// Crews per system.
    pub crews_per_system: usize,
    /// Crew depot coordinates per system; systems not listed start at
    /// their first source node.
    pub crew_home: BTreeMap<SystemKind, [f64; 2]>,
}

impl Default for CrewConfig {
    fn default() -> Self {
        CrewConfig {
            speed_m_per_hr: 40_000.0,
            repair_hours: BTreeMap::from([
                (SystemKind::Water, 8.0),
                (SystemKind::Power, 4.0),
                (SystemKind::Transport, 12.0),
            ]),
            isolation_delay_hr: 10.0 / 60.0,
            crews_per_system: 1,
            crew_home: BTreeMap::new(),
        }
    }
}

/// Entry in the simulation event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t_hr: f64,
    pub kind: SimEventKind,
    pub system: Option<SystemKind>,
    pub component: Option<String>,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimEventKind {
    FailureApplied,
    IsolationComplete,
    RepairStarted,
    RepairCompleted,
    ComponentRestored,
    RestorationDeferred,
    TeleportFallback,
    CrewWaiting,
    SupplyRecomputed,
}

/// Outcome of one simulated scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationResult {
    /// Per system: PCS step function as `(t_hr, value)` change points,
    /// starting at `t = 0`.
    pub pcs_series: BTreeMap<SystemKind, Vec<(f64, f64)>>,
    /// Per system equivalent outage hours.
    pub gamma: BTreeMap<SystemKind, f64>,
    /// Weighted EOH over systems.
    pub weighted_eoh: f64,
    pub events: Vec<SimEvent>,
    pub tmax_hr: f64,
}

/// Prioritized Consumer Serviceability: delivered over baseline supply,
/// summed over consumers with positive baseline.
pub fn pcs(supply: &[f64], baseline: &[f64]) -> Result<f64> {
    if supply.len() != baseline.len() {
        return Err(Error::InvalidArgument(
            "supply/baseline length mismatch".into(),
        ));
    }
    let mut s_sum = 0.0;
    let mut b_sum = 0.0;
    for (s, b) in supply.iter().zip(baseline) {
        if *b > 0.0 {
            s_sum += s.clamp(0.0, *b);
            b_sum += *b;
        }
    }
    if b_sum <= 0.0 {
        return Err(Error::EmptyInput(
            "PCS undefined: baseline supply is zero for every consumer".into(),
        ));
    }
    Ok(s_sum / b_sum)
}

/// Equivalent outage hours: the exact integral of `1 - PCS` over
/// `[t0, tmax]` for a step function given as change points. The value
/// before the first change point is taken as 1 (undisturbed service).
pub fn eoh(series: &[(f64, f64)], t0: f64, tmax: f64) -> Result<f64> {
    if tmax <= t0 {
        return Err(Error::InvalidArgument(format!(
            "tmax ({tmax}) must exceed t0 ({t0})"
        )));
    }
    let mut total = 0.0;
    let mut add = |start: f64, end: f64, value: f64| {
        let s = start.max(t0);
        let e = end.min(tmax);
        if e > s {
            total += (1.0 - value) * (e - s);
        }
    };
    if let Some(&(first_t, _)) = series.first() {
        add(t0, first_t, 1.0);
        for (i, &(t, v)) in series.iter().enumerate() {
            let end = series.get(i + 1).map(|p| p.0).unwrap_or(tmax);
            add(t, end, v);
        }
    }
    Ok(total)
}

/// Weighted EOH over systems; systems without a weight contribute nothing.
pub fn weighted_eoh(
    gamma: &BTreeMap<SystemKind, f64>,
    weights: &BTreeMap<SystemKind, f64>,
) -> f64 {
    gamma
        .iter()
        .map(|(k, g)| weights.get(k).copied().unwrap_or(0.0) * g)
        .sum()
}

/// Precomputed no-failure quantities shared by every scenario run.
#[derive(Debug, Clone)]
pub struct NetworkBaseline {
    pub snapshot: SupplySnapshot,
    /// Per system, per consumer (aligned with `net.consumers`): baseline
    /// supply, 0 when the consumer does not draw from the system.
    pub supply: BTreeMap<SystemKind, Vec<f64>>,
    pub link_betweenness: BTreeMap<SystemKind, Vec<f64>>,
    pub node_betweenness: BTreeMap<SystemKind, Vec<f64>>,
    /// Per-node total incident |flow|.
    pub node_flow: BTreeMap<SystemKind, Vec<f64>>,
}

/// Solves the no-failure state and the strategy orderings' inputs.
pub fn compute_baseline(net: &IndexedNetwork) -> Result<NetworkBaseline> {
    let snapshot = steady_supply(net, &OperationalState::all_up(net))?;
    let mut supply = BTreeMap::new();
    let mut link_betweenness = BTreeMap::new();
    let mut node_betweenness = BTreeMap::new();
    let mut node_flow = BTreeMap::new();
    for (kind, sys) in &net.systems {
        let per_consumer = net
            .consumers
            .iter()
            .enumerate()
            .map(|(ci, _)| snapshot.supply[ci].get(kind).copied().unwrap_or(0.0))
            .collect();
        supply.insert(*kind, per_consumer);
        let g = SimpleGraph::new(sys.node_count(), sys.links.clone())?;
        let (node_b, edge_b) = betweenness_centrality(&g);
        let flows = &snapshot.link_flow[kind];
        let mut nf = vec![0.0; sys.node_count()];
        for (e, &(a, b)) in sys.links.iter().enumerate() {
            nf[a] += flows[e].abs();
            nf[b] += flows[e].abs();
        }
        node_betweenness.insert(*kind, node_b);
        link_betweenness.insert(*kind, edge_b);
        node_flow.insert(*kind, nf);
    }
    Ok(NetworkBaseline {
        snapshot,
        supply,
        link_betweenness,
        node_betweenness,
        node_flow,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Comp {
    Link(usize),
    Node(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Up,
    Failed,
    RepairedClosed,
}

#[derive(Debug, Clone)]
struct RepairTask {
    system: SystemKind,
    comp: Comp,
    id: String,
    site: Point,
    duration: f64,
}

#[derive(Debug, Clone)]
struct CrewState {
    position: Point,
    parked: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Action {
    Isolation,
    CrewIdle(SystemKind, usize),
    RepairDone(SystemKind, usize), // task index
}

#[derive(Debug, Clone)]
struct QueueEntry {
    time: f64,
    seq: u64,
    action: Action,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for QueueEntry {}
impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // reversed: BinaryHeap is a max-heap, we want earliest first
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Scenario simulator bound to a network and its baseline.
pub struct Simulator<'a> {
    net: &'a IndexedNetwork,
    /// Copy with demands capped at baseline supply, so disrupted states
    /// can never allocate a consumer more than its normal-operations
    /// supply (the Eq.-2-style side condition `s <= S`).
    capped_net: IndexedNetwork,
    baseline: NetworkBaseline,
    crew_cfg: CrewConfig,
    weights: BTreeMap<SystemKind, f64>,
}

struct SysRuntime {
    link_status: Vec<Status>,
    node_status: Vec<Status>,
    pending: Vec<usize>,
    outstanding: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(
        net: &'a IndexedNetwork,
        crew_cfg: CrewConfig,
        weights: BTreeMap<SystemKind, f64>,
    ) -> Result<Self> {
        if crew_cfg.crews_per_system == 0 {
            return Err(Error::Config("crews_per_system must be >= 1".into()));
        }
        if !(crew_cfg.speed_m_per_hr > 0.0) {
            return Err(Error::Config("crew speed must be > 0".into()));
        }
        let baseline = compute_baseline(net)?;
        let mut capped_net = net.clone();
        for (ci, consumer) in capped_net.consumers.iter_mut().enumerate() {
            for (kind, demand) in consumer.demand.iter_mut() {
                let served = baseline.supply[kind][ci];
                if served < *demand {
                    *demand = served;
                }
            }
        }
        Ok(Simulator {
            net,
            capped_net,
            baseline,
            crew_cfg,
            weights,
        })
    }

    pub fn baseline(&self) -> &NetworkBaseline {
        &self.baseline
    }

    fn repair_duration(&self, kind: SystemKind) -> f64 {
        self.crew_cfg.repair_hours.get(&kind).copied().unwrap_or(8.0)
    }

    fn crew_home(&self, kind: SystemKind) -> Point {
        if let Some([x, y]) = self.crew_cfg.crew_home.get(&kind) {
            return Point::new(*x, *y);
        }
        let sys = &self.net.systems[&kind];
        sys.node_pos[sys.sources[0]]
    }

    /// Strategy sort key: smaller sorts first.
    fn priority_key(&self, strategy: Strategy, task: &RepairTask) -> (f64, String) {
        let sys = &self.net.systems[&task.system];
        let value = match (strategy, task.comp) {
            (Strategy::Betweenness, Comp::Link(e)) => {
                -self.baseline.link_betweenness[&task.system][e]
            }
            (Strategy::Betweenness, Comp::Node(v)) => {
                -self.baseline.node_betweenness[&task.system][v]
            }
            (Strategy::Maxflow, Comp::Link(e)) => {
                -self.baseline.snapshot.link_flow[&task.system][e].abs()
            }
            (Strategy::Maxflow, Comp::Node(v)) => -self.baseline.node_flow[&task.system][v],
            (Strategy::Zone, Comp::Link(e)) => {
                let (a, b) = sys.links[e];
                sys.node_zone[a]
                    .priority_rank()
                    .min(sys.node_zone[b].priority_rank()) as f64
            }
            (Strategy::Zone, Comp::Node(v)) => sys.node_zone[v].priority_rank() as f64,
        };
        (value, task.id.clone())
    }

    /// Road travel time from `from` to `site`: off-road to the nearest
    /// operational transport node, shortest path over operational roads to
    /// the access node nearest the site, then off-road again. `None` when
    /// the operational road graph does not connect the two ends.
    fn travel_time(
        &self,
        runtime: &BTreeMap<SystemKind, SysRuntime>,
        from: Point,
        site: Point,
    ) -> Option<f64> {
        let Some(roads) = self.net.systems.get(&SystemKind::Transport) else {
            // no road network modeled: direct travel
            return Some(from.distance(&site) / self.crew_cfg.speed_m_per_hr);
        };
        let rt = &runtime[&SystemKind::Transport];
        let up_node = |v: usize| rt.node_status[v] == Status::Up;
        let nearest = |p: &Point| -> Option<usize> {
            (0..roads.node_count())
                .filter(|&v| up_node(v))
                .min_by(|&a, &b| {
                    p.distance(&roads.node_pos[a])
                        .total_cmp(&p.distance(&roads.node_pos[b]))
                        .then(a.cmp(&b))
                })
        };
        let entry = nearest(&from)?;
        let access = nearest(&site)?;
        // Dijkstra over operational road links
        let n = roads.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap: BinaryHeap<QueueEntry> = BinaryHeap::new();
        dist[entry] = 0.0;
        heap.push(QueueEntry {
            time: 0.0,
            seq: entry as u64,
            action: Action::Isolation, // unused marker
        });
        while let Some(QueueEntry { time, seq, .. }) = heap.pop() {
            let u = seq as usize;
            if time > dist[u] {
                continue;
            }
            for &(e, v) in &roads.adj[u] {
                if rt.link_status[e] != Status::Up || !up_node(v) {
                    continue;
                }
                let nd = time + roads.link_length[e];
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(QueueEntry {
                        time: nd,
                        seq: v as u64,
                        action: Action::Isolation,
                    });
                }
            }
        }
        if !dist[access].is_finite() {
            return None;
        }
        let meters =
            from.distance(&roads.node_pos[entry]) + dist[access] + roads.node_pos[access].distance(&site);
        Some(meters / self.crew_cfg.speed_m_per_hr)
    }

    /// Runs one scenario under one strategy. Pure and deterministic in its
    /// arguments; distinct scenarios may run in parallel.
    pub fn simulate(
        &self,
        scenario: &Scenario,
        strategy: Strategy,
        tmax_hr: f64,
    ) -> Result<SimulationResult> {
        if !(tmax_hr > 0.0) {
            return Err(Error::InvalidArgument("tmax must be > 0".into()));
        }
        let net = self.net;

        // Resolve failed components and build runtime state.
        let mut runtime: BTreeMap<SystemKind, SysRuntime> = net
            .systems
            .iter()
            .map(|(k, s)| {
                (
                    *k,
                    SysRuntime {
                        link_status: vec![Status::Up; s.link_count()],
                        node_status: vec![Status::Up; s.node_count()],
                        pending: Vec::new(),
                        outstanding: 0,
                    },
                )
            })
            .collect();
        let mut tasks: Vec<RepairTask> = Vec::new();
        let mut events: Vec<SimEvent> = Vec::new();

        for (kind, ids) in &scenario.failed_links {
            let sys = net
                .systems
                .get(kind)
                .ok_or_else(|| Error::UnknownComponent(format!("system {kind}")))?;
            for id in ids {
                let e = sys
                    .link_index(id)
                    .ok_or_else(|| Error::UnknownComponent(id.clone()))?;
                runtime.get_mut(kind).unwrap().link_status[e] = Status::Failed;
                tasks.push(RepairTask {
                    system: *kind,
                    comp: Comp::Link(e),
                    id: id.clone(),
                    site: sys.link_midpoint(e),
                    duration: self.repair_duration(*kind),
                });
            }
        }
        for (kind, ids) in &scenario.failed_nodes {
            let sys = net
                .systems
                .get(kind)
                .ok_or_else(|| Error::UnknownComponent(format!("system {kind}")))?;
            for id in ids {
                let v = sys
                    .node_index(id)
                    .ok_or_else(|| Error::UnknownComponent(id.clone()))?;
                runtime.get_mut(kind).unwrap().node_status[v] = Status::Failed;
                tasks.push(RepairTask {
                    system: *kind,
                    comp: Comp::Node(v),
                    id: id.clone(),
                    site: sys.node_pos[v],
                    duration: self.repair_duration(*kind),
                });
            }
        }

        for (i, task) in tasks.iter().enumerate() {
            let rt = runtime.get_mut(&task.system).unwrap();
            rt.pending.push(i);
            rt.outstanding += 1;
            events.push(SimEvent {
                t_hr: 0.0,
                kind: SimEventKind::FailureApplied,
                system: Some(task.system),
                component: Some(task.id.clone()),
                note: String::new(),
            });
        }
        for rt in runtime.values_mut() {
            let mut order = rt.pending.clone();
            order.sort_by(|&a, &b| {
                let ka = self.priority_key(strategy, &tasks[a]);
                let kb = self.priority_key(strategy, &tasks[b]);
                ka.0.total_cmp(&kb.0).then_with(|| ka.1.cmp(&kb.1))
            });
            rt.pending = order;
        }

        let water_failed = runtime
            .get(&SystemKind::Water)
            .map(|rt| rt.outstanding > 0)
            .unwrap_or(false);
        let isolation_done = if water_failed {
            self.crew_cfg.isolation_delay_hr
        } else {
            0.0
        };

        // PCS bookkeeping.
        let mut series: BTreeMap<SystemKind, Vec<(f64, f64)>> = net
            .systems
            .keys()
            .map(|k| (*k, Vec::new()))
            .collect();
        let record_pcs = |t: f64,
                              runtime: &BTreeMap<SystemKind, SysRuntime>,
                              series: &mut BTreeMap<SystemKind, Vec<(f64, f64)>>,
                              events: &mut Vec<SimEvent>|
         -> Result<()> {
            let state = OperationalState {
                link_up: runtime
                    .iter()
                    .map(|(k, rt)| {
                        (*k, rt.link_status.iter().map(|s| *s == Status::Up).collect())
                    })
                    .collect(),
                node_up: runtime
                    .iter()
                    .map(|(k, rt)| {
                        (*k, rt.node_status.iter().map(|s| *s == Status::Up).collect())
                    })
                    .collect(),
            };
            let snapshot = steady_supply(&self.capped_net, &state)?;
            if snapshot.conservation_violation > 1e-9 * 1e3 {
                return Err(Error::SimInvariant(format!(
                    "flow conservation violated by {:.3e}",
                    snapshot.conservation_violation
                )));
            }
            let mut notes = Vec::new();
            for kind in net.systems.keys() {
                let baseline = &self.baseline.supply[kind];
                let current: Vec<f64> = net
                    .consumers
                    .iter()
                    .enumerate()
                    .map(|(ci, _)| snapshot.supply[ci].get(kind).copied().unwrap_or(0.0))
                    .collect();
                for (s, b) in current.iter().zip(baseline) {
                    if *s < -1e-9 || *s > b + 1e-6 {
                        return Err(Error::SimInvariant(format!(
                            "supply bound violated: s = {s}, baseline = {b}"
                        )));
                    }
                }
                let value = match pcs(&current, baseline) {
                    Ok(v) => v,
                    // a system serving no positive-baseline consumers is
                    // trivially undisturbed
                    Err(Error::EmptyInput(_)) => 1.0,
                    Err(e) => return Err(e),
                };
                if !(0.0..=1.0 + 1e-9).contains(&value) {
                    return Err(Error::SimInvariant(format!("PCS out of range: {value}")));
                }
                let value = value.min(1.0);
                let points = series.get_mut(kind).unwrap();
                if points.last().map(|&(_, v)| (v - value).abs() > 1e-12).unwrap_or(true) {
                    points.push((t, value));
                }
                notes.push(format!("{kind}={value:.4}"));
            }
            events.push(SimEvent {
                t_hr: t,
                kind: SimEventKind::SupplyRecomputed,
                system: None,
                component: None,
                note: notes.join(" "),
            });
            Ok(())
        };

        record_pcs(0.0, &runtime, &mut series, &mut events)?;

        // Crews and event queue.
        let mut crews: BTreeMap<SystemKind, Vec<CrewState>> = net
            .systems
            .keys()
            .map(|k| {
                (
                    *k,
                    (0..self.crew_cfg.crews_per_system)
                        .map(|_| CrewState {
                            position: self.crew_home(*k),
                            parked: false,
                        })
                        .collect(),
                )
            })
            .collect();
        let mut heap: BinaryHeap<QueueEntry> = BinaryHeap::new();
        let mut seq = 0u64;
        let push = |heap: &mut BinaryHeap<QueueEntry>, seq: &mut u64, time: f64, action: Action| {
            heap.push(QueueEntry {
                time,
                seq: *seq,
                action,
            });
            *seq += 1;
        };

        if water_failed {
            push(&mut heap, &mut seq, isolation_done, Action::Isolation);
        }
        for (kind, rt) in &runtime {
            if !rt.pending.is_empty() {
                for crew_idx in 0..self.crew_cfg.crews_per_system {
                    push(&mut heap, &mut seq, 0.0, Action::CrewIdle(*kind, crew_idx));
                }
            }
        }

        let mut last_time = 0.0f64;
        while let Some(QueueEntry { time, action, .. }) = heap.pop() {
            last_time = last_time.max(time);
            match action {
                Action::Isolation => {
                    events.push(SimEvent {
                        t_hr: time,
                        kind: SimEventKind::IsolationComplete,
                        system: Some(SystemKind::Water),
                        component: None,
                        note: "failed mains isolated by shutoff valves".into(),
                    });
                    record_pcs(time, &runtime, &mut series, &mut events)?;
                }
                Action::CrewIdle(kind, crew_idx) => {
                    if runtime[&kind].pending.is_empty() {
                        continue;
                    }
                    let crew_pos = crews[&kind][crew_idx].position;
                    // first reachable task in priority order
                    let mut chosen: Option<(usize, f64, bool)> = None; // (pending slot, travel, teleported)
                    for (slot, &task_idx) in runtime[&kind].pending.iter().enumerate() {
                        if let Some(travel) =
                            self.travel_time(&runtime, crew_pos, tasks[task_idx].site)
                        {
                            chosen = Some((slot, travel, false));
                            break;
                        }
                    }
                    if chosen.is_none() {
                        let transport_busy = runtime
                            .get(&SystemKind::Transport)
                            .map(|rt| rt.outstanding > 0)
                            .unwrap_or(false);
                        if kind == SystemKind::Transport || !transport_busy {
                            // roads will not improve: fall back to direct travel
                            let slot = 0;
                            let task_idx = runtime[&kind].pending[slot];
                            let travel = crew_pos.distance(&tasks[task_idx].site)
                                / self.crew_cfg.speed_m_per_hr;
                            events.push(SimEvent {
                                t_hr: time,
                                kind: SimEventKind::TeleportFallback,
                                system: Some(kind),
                                component: Some(tasks[task_idx].id.clone()),
                                note: "component unreachable by road; direct travel fallback"
                                    .into(),
                            });
                            chosen = Some((slot, travel, true));
                        } else {
                            crews.get_mut(&kind).unwrap()[crew_idx].parked = true;
                            events.push(SimEvent {
                                t_hr: time,
                                kind: SimEventKind::CrewWaiting,
                                system: Some(kind),
                                component: None,
                                note: "no failed component reachable; waiting for road repairs"
                                    .into(),
                            });
                            continue;
                        }
                    }
                    let (slot, travel, _teleported) = chosen.unwrap();
                    let task_idx = runtime.get_mut(&kind).unwrap().pending.remove(slot);
                    let task = &tasks[task_idx];
                    let arrival = time + travel;
                    let start = if kind == SystemKind::Water {
                        arrival.max(isolation_done)
                    } else {
                        arrival
                    };
                    events.push(SimEvent {
                        t_hr: start,
                        kind: SimEventKind::RepairStarted,
                        system: Some(kind),
                        component: Some(task.id.clone()),
                        note: format!("travel {travel:.3} h"),
                    });
                    crews.get_mut(&kind).unwrap()[crew_idx].position = task.site;
                    push(
                        &mut heap,
                        &mut seq,
                        start + task.duration,
                        Action::RepairDone(kind, task_idx),
                    );
                    // crew is implicitly busy; next CrewIdle comes with RepairDone
                    push(
                        &mut heap,
                        &mut seq,
                        start + task.duration,
                        Action::CrewIdle(kind, crew_idx),
                    );
                }
                Action::RepairDone(kind, task_idx) => {
                    let task = &tasks[task_idx];
                    {
                        let rt = runtime.get_mut(&kind).unwrap();
                        match task.comp {
                            Comp::Link(e) => rt.link_status[e] = Status::RepairedClosed,
                            Comp::Node(v) => rt.node_status[v] = Status::RepairedClosed,
                        }
                        rt.outstanding -= 1;
                    }
                    events.push(SimEvent {
                        t_hr: time,
                        kind: SimEventKind::RepairCompleted,
                        system: Some(kind),
                        component: Some(task.id.clone()),
                        note: String::new(),
                    });
                    // Reopen everything repaired whose neighborhood is clear.
                    let restored = reopen_clear_components(
                        &self.net.systems[&kind],
                        runtime.get_mut(&kind).unwrap(),
                    );
                    let this_restored = restored.iter().any(|c| *c == task.comp);
                    for comp in &restored {
                        let id = match comp {
                            Comp::Link(e) => self.net.systems[&kind].link_ids[*e].clone(),
                            Comp::Node(v) => self.net.systems[&kind].node_ids[*v].clone(),
                        };
                        events.push(SimEvent {
                            t_hr: time,
                            kind: SimEventKind::ComponentRestored,
                            system: Some(kind),
                            component: Some(id),
                            note: String::new(),
                        });
                    }
                    if !this_restored {
                        events.push(SimEvent {
                            t_hr: time,
                            kind: SimEventKind::RestorationDeferred,
                            system: Some(kind),
                            component: Some(task.id.clone()),
                            note: "adjacent component still failed; staying isolated".into(),
                        });
                    }
                    if !restored.is_empty() {
                        record_pcs(time, &runtime, &mut series, &mut events)?;
                        if kind == SystemKind::Transport {
                            // roads reopened: wake every parked crew
                            for (ck, crew_list) in crews.iter_mut() {
                                for (ci, crew) in crew_list.iter_mut().enumerate() {
                                    if crew.parked {
                                        crew.parked = false;
                                        push(
                                            &mut heap,
                                            &mut seq,
                                            time,
                                            Action::CrewIdle(*ck, ci),
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }

        // Terminal checks: everything restored and PCS back to 1.
        for (kind, rt) in &runtime {
            let all_up = rt.link_status.iter().all(|s| *s == Status::Up)
                && rt.node_status.iter().all(|s| *s == Status::Up);
            if !all_up {
                return Err(Error::SimInvariant(format!(
                    "system `{kind}` not fully restored at end of recovery"
                )));
            }
        }
        if last_time >= tmax_hr {
            return Err(Error::InvalidArgument(format!(
                "recovery finished at {last_time:.2} h, beyond tmax {tmax_hr} h"
            )));
        }
        for (kind, points) in &series {
            let terminal = points.last().map(|&(_, v)| v).unwrap_or(1.0);
            if (terminal - 1.0).abs() > 1e-6 {
                return Err(Error::SimInvariant(format!(
                    "terminal PCS for `{kind}` is {terminal}, expected 1"
                )));
            }
        }

        events.sort_by(|a, b| a.t_hr.total_cmp(&b.t_hr));
        let mut gamma = BTreeMap::new();
        for (kind, points) in &series {
            gamma.insert(*kind, eoh(points, 0.0, tmax_hr)?);
        }
        let weighted = weighted_eoh(&gamma, &self.weights);
        Ok(SimulationResult {
            pcs_series: series,
            gamma,
            weighted_eoh: weighted,
            events,
            tmax_hr,
        })
    }
}

/// Restores every repaired-but-closed component with no failed neighbor;
/// returns what was restored.
fn reopen_clear_components(
    sys: &crate::network::IndexedSystem,
    rt: &mut SysRuntime,
) -> Vec<Comp> {
    let mut restored = Vec::new();
    loop {
        let mut changed = false;
        for e in 0..sys.link_count() {
            if rt.link_status[e] == Status::RepairedClosed && !link_has_failed_neighbor(sys, rt, e)
            {
                rt.link_status[e] = Status::Up;
                restored.push(Comp::Link(e));
                changed = true;
            }
        }
        for v in 0..sys.node_count() {
            if rt.node_status[v] == Status::RepairedClosed && !node_has_failed_neighbor(sys, rt, v)
            {
                rt.node_status[v] = Status::Up;
                restored.push(Comp::Node(v));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    restored
}

fn link_has_failed_neighbor(
    sys: &crate::network::IndexedSystem,
    rt: &SysRuntime,
    e: usize,
) -> bool {
    let (a, b) = sys.links[e];
    for &v in &[a, b] {
        if rt.node_status[v] == Status::Failed {
            return true;
        }
        for &(e2, _) in &sys.adj[v] {
            if e2 != e && rt.link_status[e2] == Status::Failed {
                return true;
            }
        }
    }
    false
}

fn node_has_failed_neighbor(
    sys: &crate::network::IndexedSystem,
    rt: &SysRuntime,
    v: usize,
) -> bool {
    for &(e, w) in &sys.adj[v] {
        if rt.link_status[e] == Status::Failed || rt.node_status[w] == Status::Failed {
            return true;
        }
    }
    false
}

/// One-shot convenience wrapper around [`Simulator`].
pub fn simulate_event(
    net: &IndexedNetwork,
    scenario: &Scenario,
    strategy: Strategy,
    crew_cfg: CrewConfig,
    weights: BTreeMap<SystemKind, f64>,
    tmax_hr: f64,
) -> Result<SimulationResult> {
    Simulator::new(net, crew_cfg, weights)?.simulate(scenario, strategy, tmax_hr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcs_examples() {
        assert_eq!(pcs(&[5.0, 5.0], &[5.0, 5.0]).unwrap(), 1.0);
        assert_eq!(pcs(&[5.0, 0.0], &[5.0, 5.0]).unwrap(), 0.5);
        assert_eq!(pcs(&[0.0, 0.0], &[5.0, 5.0]).unwrap(), 0.0);
        assert!(pcs(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn eoh_rectangle_and_flat() {
        let series = vec![(0.0, 0.5), (10.0, 1.0)];
        assert_eq!(eoh(&series, 0.0, 100.0).unwrap(), 5.0);
        let flat = vec![(0.0, 1.0)];
        assert_eq!(eoh(&flat, 0.0, 50.0).unwrap(), 0.0);
        assert!(eoh(&flat, 10.0, 10.0).is_err());
    }

    #[test]
    fn eoh_staircase_approximates_triangle() {
        // PCS rising linearly 0 -> 1 over 10 h in 0.1 h steps
        let mut series = Vec::new();
        let mut t = 0.0;
        while t < 10.0 {
            series.push((t, t / 10.0));
            t += 0.1;
        }
        series.push((10.0, 1.0));
        let g = eoh(&series, 0.0, 20.0).unwrap();
        assert!((g - 5.0).abs() <= 0.1, "gamma = {g}");
    }

    #[test]
    fn weighted_eoh_paper_values() {
        let gamma = BTreeMap::from([
            (SystemKind::Water, 17.55),
            (SystemKind::Power, 2.92),
        ]);
        let weights = BTreeMap::from([
            (SystemKind::Water, 0.5),
            (SystemKind::Power, 0.5),
        ]);
        assert!((weighted_eoh(&gamma, &weights) - 10.235).abs() < 1e-12);
        assert_eq!(weighted_eoh(&gamma, &BTreeMap::new()), 0.0);
        let single = BTreeMap::from([(SystemKind::Water, 1.0)]);
        assert_eq!(weighted_eoh(&gamma, &single), 17.55);
    }
}
