//! Conflict-free sidelink subchannel allocation for network-assisted
//! (mode-3) V2V broadcast.
//!
//! The eNodeB hands out subchannels of an `L x K` grid to vehicles grouped in
//! (possibly overlapping) clusters. An allocation must meet each vehicle's
//! rate window and avoid three kinds of conflict; see [`constraints`].
//!
//! * [`exact`] maximizes the sum rate under all four requirements.
//! * [`mikp`] is the three-stage heuristic: sort clusters, randomly match
//!   vehicles to subframes, then pick subchannels with a subset-sum knapsack.
//! * [`harness`] runs seeded Monte Carlo campaigns over both and emits
//!   per-QoS-group statistics.
//!
//! ```
//! use v2v_alloc::prelude::*;
//!
//! let (scenario, grid) = v2v_alloc::example::worked_example();
//! let system = ConstraintSystem::new(&scenario, &grid);
//! assert_eq!(system.intra_pair_count(), 5);
//! assert_eq!(system.hop_pair_count(), 1);
//! ```

pub mod channel;
pub mod constraints;
pub mod exact;
pub mod example;
pub mod harness;
pub mod mikp;
pub mod scenario;
pub mod solution;

pub mod prelude {
    pub use crate::channel::{capacity_of, generate_capacities, CapacityMap, ChannelModelParams};
    pub use crate::constraints::{fold_to_subframes, verify, Assignment, ConflictReport, ConstraintSystem};
    pub use crate::scenario::{ChannelGrid, RawScenario, Scenario, VehicleId, VehiclePair};
}

/// The guide in `book/`, compiled so its examples stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/scenario.md")]
    mod scenario {}
    #[doc = include_str!("../../../book/src/constraints.md")]
    mod constraints {}
    #[doc = include_str!("../../../book/src/exact.md")]
    mod exact {}
    #[doc = include_str!("../../../book/src/heuristic.md")]
    mod heuristic {}
    #[doc = include_str!("../../../book/src/campaigns.md")]
    mod campaigns {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
