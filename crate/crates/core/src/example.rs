//! Small reference topologies used in docs, tests and the `example`
//! subcommand.

use crate::scenario::{ChannelGrid, RawScenario, Scenario};

/// Four vehicles in two overlapping clusters `{v1, v2, v3}` and
/// `{v1, v2, v4}` over a 3 x 3 grid.
pub fn worked_example() -> (Scenario, ChannelGrid) {
    let s = Scenario::new(RawScenario {
        vehicles: 4,
        clusters: vec![vec![1, 2, 3], vec![1, 2, 4]],
        qos_bps: vec![2.52e6; 4],
        epsilon_bps: 0.5e6,
    })
    .expect("static scenario is valid");
    let g = ChannelGrid::with_default_bandwidth(3, 3).expect("static grid is valid");
    (s, g)
}

/// Eleven vehicles in three clusters: `{v1..v6}` and `{v5..v9}` share
/// `{v5, v6}`, while `{v10, v11}` stands alone.
pub fn motivating_topology(subframes: usize, subchannels: usize) -> (Scenario, ChannelGrid) {
    let s = Scenario::new(RawScenario {
        vehicles: 11,
        clusters: vec![vec![1, 2, 3, 4, 5, 6], vec![5, 6, 7, 8, 9], vec![10, 11]],
        qos_bps: vec![2e6; 11],
        epsilon_bps: 1e6,
    })
    .expect("static scenario is valid");
    let g = ChannelGrid::with_default_bandwidth(subframes, subchannels).expect("grid within spectrum limit");
    (s, g)
}
