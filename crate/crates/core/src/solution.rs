//! Result type shared by the exact solver, its brute-force oracle and the
//! knapsack heuristic.

use serde::{Deserialize, Serialize};

use crate::channel::CapacityMap;
use crate::constraints::Assignment;
use crate::scenario::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Proven maximum of the sum rate under all four requirement types.
    Optimal,
    /// No assignment satisfies every requirement (or, for the heuristic,
    /// some cluster has more vehicles than free subframes).
    Infeasible,
    /// A time or node limit stopped the search; any assignment carried is
    /// the best incumbent and is not proven optimal.
    Timeout,
    /// The heuristic completed. Conflict-free by construction, but rates
    /// may fall outside the QoS windows and nothing is claimed about
    /// optimality.
    Heuristic,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Timeout => "timeout",
            SolveStatus::Heuristic => "heuristic",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Search nodes (exact), enumerated leaves (brute force) or knapsack
    /// instances solved (heuristic).
    pub nodes_explored: u64,
    /// Wall-clock time of the call.
    pub elapsed_s: f64,
    /// Independent sub-problems the exact solver split the instance into.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    /// Subframe each vehicle was matched to by the heuristic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_subframes: Option<Vec<Option<usize>>>,
    /// Vehicles whose knapsack had no admissible subchannel (all taken by
    /// one-hop partners or each above the vehicle's budget).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocked: Vec<VehicleId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    /// `c^T x` of the carried assignment, 0 when there is none.
    pub objective_bps: f64,
    pub per_vehicle_rate_bps: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl SolveResult {
    pub(crate) fn without_assignment(status: SolveStatus, vehicles: usize, diagnostics: Diagnostics) -> Self {
        Self {
            status,
            assignment: None,
            objective_bps: 0.0,
            per_vehicle_rate_bps: vec![0.0; vehicles],
            diagnostics,
        }
    }

    pub(crate) fn with_assignment(
        status: SolveStatus,
        assignment: Assignment,
        c: &CapacityMap,
        diagnostics: Diagnostics,
    ) -> Self {
        let per_vehicle_rate_bps = assignment.rates(c);
        let objective_bps = per_vehicle_rate_bps.iter().sum();
        Self { status, assignment: Some(assignment), objective_bps, per_vehicle_rate_bps, diagnostics }
    }

    /// Whether the result carries a usable allocation.
    pub fn is_success(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::Heuristic)
    }
}
