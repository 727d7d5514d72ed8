// scratch probe: per-system elbow counts for testbed variants
use resilsim_core::network::{build_synthetic_testbed, IndexedNetwork, TestbedConfig};
use resilsim_core::pipeline::{build_feature_set, MlConfig};
use resilsim_core::search::{elbow_baseline, SearchConfig};

fn main() {
    let variants: Vec<(&str, TestbedConfig)> = vec![
        ("default", TestbedConfig::default()),
        ("arterial2", TestbedConfig { arterial_every: 2, ..TestbedConfig::default() }),
        ("jitter25", TestbedConfig { demand_jitter_frac: 0.25, ..TestbedConfig::default() }),
        ("steep-caps", TestbedConfig {
            water_capacity_fracs: [0.8, 0.25, 0.08],
            road_capacities: [6000.0, 900.0, 150.0],
            ..TestbedConfig::default()
        }),
        ("grid12", TestbedConfig { rows: 12, cols: 12, ..TestbedConfig::default() }),
        ("arterial2-steep", TestbedConfig {
            arterial_every: 2,
            water_capacity_fracs: [0.8, 0.25, 0.08],
            road_capacities: [6000.0, 900.0, 150.0],
            ..TestbedConfig::default()
        }),
    ];
    for (name, cfg) in variants {
        let net = match build_synthetic_testbed(&cfg, 1) {
            Ok(n) => n,
            Err(e) => { println!("{name}: build error {e}"); continue; }
        };
        let indexed = IndexedNetwork::build(&net).unwrap();
        match build_feature_set(&indexed, &MlConfig::default()) {
            Ok((set, _)) => {
                let elbow = elbow_baseline(&set, &SearchConfig::default(), 3).unwrap();
                let counts: Vec<(String, usize)> = elbow
                    .iter()
                    .map(|(k, r)| (k.to_string(), r.k_star))
                    .collect();
                println!("{name}: {counts:?}");
            }
            Err(e) => println!("{name}: features error {e}"),
        }
    }
}
