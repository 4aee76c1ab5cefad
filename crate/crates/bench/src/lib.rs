//! Shared fixtures for the criterion benches.

use covertour::{generate_instance, generate_node_set, CostConfig, Instance};

/// Default-config instance on a fresh node set.
pub fn instance(n: usize, seed: u64) -> Instance {
    let nodes = generate_node_set(seed, n, 15.0).expect("node set");
    generate_instance(&nodes, seed ^ 0x5eed, &CostConfig::default()).expect("instance")
}
