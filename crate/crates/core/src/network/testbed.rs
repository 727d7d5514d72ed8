//! Deterministic synthetic grid-town generator.
//!
//! The generator lays out a `rows x cols` grid of street intersections with
//! `spacing_m` meters between neighbors; point `(r, c)` sits at
//! `(c * spacing, r * spacing)`. Three system graphs share these
//! coordinates:
//!
//! - **transport**: a node at every grid point and a road link on every
//!   horizontal/vertical adjacency (`rows*(cols-1) + cols*(rows-1)` links);
//!   the depot at the grid center is the system source. Grid lines carry a
//!   three-tier capacity hierarchy (primary corridors, arterials, local
//!   streets) repeating every `arterial_every` lines.
//! - **water**: same grid layout (looped network) with the same line
//!   hierarchy splitting primary trunks, trunks, and distribution mains;
//!   the tank at the south-west corner is a gravity-fed source, a pumped
//!   well at the north-east corner is a second source, and a booster pump
//!   sits at the grid center. Pumped nodes carry a `pump-power-feed`
//!   dependency on the co-located power node.
//! - **power**: a radial (tree) network: a horizontal feeder spine along
//!   the middle row plus every column connected vertically, giving
//!   `rows*cols - 1` lines; the substation at the east end of the spine is
//!   the source.
//!
//! Zones: nodes within one sixth of the grid span from the center are CBD;
//! the remaining north-east quadrant is industrial; everything else is
//! residential. One consumer per grid point taps the co-located water,
//! power, and transport nodes, with zone-scaled demands jittered a few
//! percent by the seed.
//!
//! A stream polyline crosses the town diagonally through the central band,
//! so central (CBD-heavy) components sit closest to the hazard.

use super::{
    Consumer, DependencyLink, InfraNetwork, Link, Node, SystemGraph, SystemKind, Zone,
};
use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Parameters of the grid-town generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestbedConfig {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    /// Residential per-consumer demands; CBD consumers draw 3x and
    /// industrial 2x these.
    pub water_demand_base: f64,
    pub power_demand_base: f64,
    pub transport_demand_base: f64,
    /// Every n-th grid line is an arterial road / trunk main; every
    /// (3n)-th line is a primary corridor.
    pub arterial_every: usize,
    /// Water main capacity as fractions of total water demand, by class
    /// (primary trunk, trunk, distribution).
    pub water_capacity_fracs: [f64; 3],
    /// Road capacities in vehicles/hour by class (primary, arterial,
    /// local).
    pub road_capacities: [f64; 3],
    /// Relative demand jitter applied per consumer from the seed.
    pub demand_jitter_frac: f64,
}

impl Default for TestbedConfig {
    fn default() -> Self {
        TestbedConfig {
            rows: 10,
            cols: 10,
            spacing_m: 100.0,
            water_demand_base: 20.0,
            power_demand_base: 30.0,
            transport_demand_base: 10.0,
            arterial_every: 3,
            water_capacity_fracs: [0.6, 0.3, 0.18],
            road_capacities: [4000.0, 1200.0, 300.0],
            demand_jitter_frac: 0.1,
        }
    }
}

impl TestbedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::InvalidArgument(format!(
                "testbed grid must be at least 2x2, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.spacing_m > 0.0) {
            return Err(Error::InvalidArgument(
                "testbed spacing_m must be > 0".into(),
            ));
        }
        if self.arterial_every == 0 {
            return Err(Error::InvalidArgument("arterial_every must be >= 1".into()));
        }
        for value in self
            .water_capacity_fracs
            .iter()
            .chain(self.road_capacities.iter())
        {
            if !(*value > 0.0) {
                return Err(Error::InvalidArgument(
                    "link capacity classes must be > 0".into(),
                ));
            }
        }
        if !(0.0..1.0).contains(&self.demand_jitter_frac) {
            return Err(Error::InvalidArgument(
                "demand_jitter_frac must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Class of a grid line: primary corridor every `3 * arterial_every`
/// lines, arterial every `arterial_every`, local otherwise. A horizontal
/// link lies on its row line, a vertical link on its column line.
fn line_class(cfg: &TestbedConfig, line_index: usize) -> usize {
    if line_index % (3 * cfg.arterial_every) == 0 {
        0
    } else if line_index % cfg.arterial_every == 0 {
        1
    } else {
        2
    }
}

fn node_id(kind: SystemKind, r: usize, c: usize) -> String {
    format!("{kind}:node:r{r}c{c}")
}

fn link_id(kind: SystemKind, r0: usize, c0: usize, r1: usize, c1: usize) -> String {
    format!("{kind}:link:r{r0}c{c0}-r{r1}c{c1}")
}

fn consumer_id(r: usize, c: usize) -> String {
    format!("consumer:r{r}c{c}")
}

/// Zone of grid point `(r, c)` under the documented zoning rule.
fn zone_of(cfg: &TestbedConfig, r: usize, c: usize) -> Zone {
    let cr = (cfg.rows - 1) as f64 / 2.0;
    let cc = (cfg.cols - 1) as f64 / 2.0;
    let half_band_r = cfg.rows as f64 / 6.0;
    let half_band_c = cfg.cols as f64 / 6.0;
    let (rf, cf) = (r as f64, c as f64);
    if (rf - cr).abs() <= half_band_r && (cf - cc).abs() <= half_band_c {
        Zone::Cbd
    } else if rf >= cr && cf >= cc {
        Zone::Industrial
    } else {
        Zone::Residential
    }
}

fn zone_demand_multiplier(zone: Zone) -> f64 {
    match zone {
        Zone::Cbd => 3.0,
        Zone::Industrial => 2.0,
        Zone::Residential => 1.0,
    }
}

/// Builds the synthetic interdependent testbed. Pure function of
/// `(cfg, seed)`: equal inputs produce byte-identical serialized networks.
pub fn build_synthetic_testbed(cfg: &TestbedConfig, seed: u64) -> Result<InfraNetwork> {
    cfg.validate()?;
    let (rows, cols, s) = (cfg.rows, cfg.cols, cfg.spacing_m);
    let center_r = rows / 2;
    let center_c = cols / 2;
    // the depot needs arterial access; snap the center to the nearest
    // arterial crossing
    let snap = |at: usize, limit: usize| -> usize {
        let step = cfg.arterial_every as f64;
        let snapped = ((at as f64 / step).round() * step) as usize;
        snapped.min(limit - 1)
    };
    let depot = (snap(center_r, rows), snap(center_c, cols));

    // Per-consumer demands, jittered per grid point.
    let mut water_demand = vec![vec![0.0; cols]; rows];
    let mut power_demand = vec![vec![0.0; cols]; rows];
    let mut transport_demand = vec![vec![0.0; cols]; rows];
    for r in 0..rows {
        for c in 0..cols {
            let mut unit_rng = rng::rng(rng::mix(seed, (r * cols + c) as u64));
            let mult = zone_demand_multiplier(zone_of(cfg, r, c));
            let jitter = |rng: &mut rand_chacha::ChaCha8Rng, base: f64| {
                let f = 1.0 + cfg.demand_jitter_frac * rng.gen_range(-1.0..=1.0);
                (base * mult * f * 100.0).round() / 100.0
            };
            water_demand[r][c] = jitter(&mut unit_rng, cfg.water_demand_base);
            power_demand[r][c] = jitter(&mut unit_rng, cfg.power_demand_base);
            transport_demand[r][c] = jitter(&mut unit_rng, cfg.transport_demand_base);
        }
    }
    let total = |d: &Vec<Vec<f64>>| d.iter().flatten().sum::<f64>();
    let total_water = total(&water_demand);
    let total_power = total(&power_demand);
    let total_transport = total(&transport_demand);

    let grid_nodes = |kind: SystemKind, capacity: &dyn Fn(usize, usize) -> f64| -> Vec<Node> {
        let mut nodes = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(Node {
                    id: node_id(kind, r, c),
                    x: c as f64 * s,
                    y: r as f64 * s,
                    zone: zone_of(cfg, r, c),
                    capacity: capacity(r, c),
                });
            }
        }
        nodes
    };
    // capacity(is_horizontal_line, line_index): horizontal links lie on a
    // row line, vertical links on a column line
    let grid_links = |kind: SystemKind, capacity: &dyn Fn(usize) -> f64| -> Vec<Link> {
        let mut links = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    links.push(Link {
                        id: link_id(kind, r, c, r, c + 1),
                        from: node_id(kind, r, c),
                        to: node_id(kind, r, c + 1),
                        capacity: capacity(r),
                        length_m: s,
                    });
                }
                if r + 1 < rows {
                    links.push(Link {
                        id: link_id(kind, r, c, r + 1, c),
                        from: node_id(kind, r, c),
                        to: node_id(kind, r + 1, c),
                        capacity: capacity(c),
                        length_m: s,
                    });
                }
            }
        }
        links
    };

    // Transport: full grid, depot source at the arterial crossing nearest
    // the center; arterial lines carry most of the traffic.
    let transport = SystemGraph {
        kind: SystemKind::Transport,
        nodes: grid_nodes(SystemKind::Transport, &|r, c| {
            if (r, c) == depot {
                total_transport * 1.5
            } else {
                total_transport * 2.0
            }
        }),
        links: grid_links(SystemKind::Transport, &|line| {
            cfg.road_capacities[line_class(cfg, line)]
        }),
        sources: vec![node_id(SystemKind::Transport, depot.0, depot.1)],
    };

    // Water: full grid; tank at (0,0), pumped well at (rows-1, cols-1);
    // trunk mains on arterial lines, distribution mains elsewhere.
    let tank = (0usize, 0usize);
    let well = (rows - 1, cols - 1);
    let booster = (center_r, center_c);
    let water = SystemGraph {
        kind: SystemKind::Water,
        nodes: grid_nodes(SystemKind::Water, &|r, c| {
            if (r, c) == tank {
                total_water * 1.5
            } else if (r, c) == well {
                total_water * 0.75
            } else {
                total_water * 2.0
            }
        }),
        links: grid_links(SystemKind::Water, &|line| {
            total_water * cfg.water_capacity_fracs[line_class(cfg, line)]
        }),
        sources: vec![
            node_id(SystemKind::Water, tank.0, tank.1),
            node_id(SystemKind::Water, well.0, well.1),
        ],
    };

    // Power: feeder spine along the middle row plus vertical column lines,
    // a spanning tree. Substation at the east end of the spine.
    let spine_r = rows / 2;
    let substation = (spine_r, cols - 1);
    let mut power_links = Vec::new();
    for c in 0..cols - 1 {
        power_links.push(Link {
            id: link_id(SystemKind::Power, spine_r, c, spine_r, c + 1),
            from: node_id(SystemKind::Power, spine_r, c),
            to: node_id(SystemKind::Power, spine_r, c + 1),
            capacity: total_power,
            length_m: s,
        });
    }
    for c in 0..cols {
        for r in 0..rows - 1 {
            power_links.push(Link {
                id: link_id(SystemKind::Power, r, c, r + 1, c),
                from: node_id(SystemKind::Power, r, c),
                to: node_id(SystemKind::Power, r + 1, c),
                capacity: total_power,
                length_m: s,
            });
        }
    }
    let power = SystemGraph {
        kind: SystemKind::Power,
        nodes: grid_nodes(SystemKind::Power, &|r, c| {
            if (r, c) == substation {
                total_power * 1.5
            } else {
                total_power * 2.0
            }
        }),
        links: power_links,
        sources: vec![node_id(SystemKind::Power, substation.0, substation.1)],
    };

    // Pumped water nodes depend on the co-located power node.
    let dependencies = vec![
        DependencyLink {
            from_system: SystemKind::Power,
            from_node: node_id(SystemKind::Power, well.0, well.1),
            to_system: SystemKind::Water,
            to_node: node_id(SystemKind::Water, well.0, well.1),
            kind: "pump-power-feed".into(),
        },
        DependencyLink {
            from_system: SystemKind::Power,
            from_node: node_id(SystemKind::Power, booster.0, booster.1),
            to_system: SystemKind::Water,
            to_node: node_id(SystemKind::Water, booster.0, booster.1),
            kind: "pump-power-feed".into(),
        },
    ];

    let mut consumers = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let zone = zone_of(cfg, r, c);
            consumers.push(Consumer {
                id: consumer_id(r, c),
                attachments: BTreeMap::from([
                    (SystemKind::Water, node_id(SystemKind::Water, r, c)),
                    (SystemKind::Power, node_id(SystemKind::Power, r, c)),
                    (SystemKind::Transport, node_id(SystemKind::Transport, r, c)),
                ]),
                demands: BTreeMap::from([
                    (SystemKind::Water, water_demand[r][c]),
                    (SystemKind::Power, power_demand[r][c]),
                    (SystemKind::Transport, transport_demand[r][c]),
                ]),
                priority: zone_demand_multiplier(zone),
            });
        }
    }

    // Diagonal stream through the central band of town.
    let width = (cols - 1) as f64 * s;
    let height = (rows - 1) as f64 * s;
    let stream_polyline = vec![
        [-0.6 * s, 0.30 * height],
        [0.30 * width, 0.42 * height],
        [0.70 * width, 0.58 * height],
        [width + 0.6 * s, 0.72 * height],
    ];

    let mut systems = BTreeMap::new();
    systems.insert(SystemKind::Power, power);
    systems.insert(SystemKind::Water, water);
    systems.insert(SystemKind::Transport, transport);

    Ok(InfraNetwork {
        systems,
        dependencies,
        consumers,
        stream_polyline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::validate_network;

    fn cfg4x4() -> TestbedConfig {
        TestbedConfig {
            rows: 4,
            cols: 4,
            ..TestbedConfig::default()
        }
    }

    #[test]
    fn four_by_four_counts_follow_construction_rule() {
        let net = build_synthetic_testbed(&cfg4x4(), 7).unwrap();
        let transport = &net.systems[&SystemKind::Transport];
        let water = &net.systems[&SystemKind::Water];
        let power = &net.systems[&SystemKind::Power];
        // grid rule: rows*cols nodes per system
        assert_eq!(transport.nodes.len(), 16);
        assert_eq!(water.nodes.len(), 16);
        assert_eq!(power.nodes.len(), 16);
        // transport/water: rows*(cols-1) + cols*(rows-1) grid links
        assert_eq!(transport.links.len(), 4 * 3 + 4 * 3);
        assert_eq!(water.links.len(), 24);
        // power: spanning tree, rows*cols - 1 lines
        assert_eq!(power.links.len(), 15);
        assert_eq!(net.consumers.len(), 16);
        assert_eq!(net.dependencies.len(), 2);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = build_synthetic_testbed(&cfg4x4(), 7).unwrap();
        let b = build_synthetic_testbed(&cfg4x4(), 7).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = build_synthetic_testbed(&cfg4x4(), 8).unwrap();
        assert_ne!(a.to_json().unwrap(), c.to_json().unwrap());
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        let cfg = TestbedConfig {
            rows: 1,
            cols: 1,
            ..TestbedConfig::default()
        };
        assert!(build_synthetic_testbed(&cfg, 7).is_err());
    }

    #[test]
    fn generated_testbeds_validate_clean() {
        for seed in [0, 1, 42] {
            let net = build_synthetic_testbed(&TestbedConfig::default(), seed).unwrap();
            let report = validate_network(&net);
            assert!(report.is_valid(), "seed {seed}: {:?}", report.violations);
        }
    }

    #[test]
    fn zones_cover_center_and_quadrant() {
        let net = build_synthetic_testbed(&TestbedConfig::default(), 1).unwrap();
        let water = &net.systems[&SystemKind::Water];
        let count = |z: Zone| water.nodes.iter().filter(|n| n.zone == z).count();
        assert!(count(Zone::Cbd) > 0);
        assert!(count(Zone::Industrial) > 0);
        assert!(count(Zone::Residential) > count(Zone::Industrial));
    }
}
