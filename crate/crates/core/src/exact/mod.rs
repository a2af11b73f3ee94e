//! Exact maximisation of the sum rate `c^T x` under all four requirement
//! types, plus an exhaustive oracle for tiny instances.
//!
//! The instance is described by per-vehicle columns (see [`model`]) and
//! split into connected components of the conflict graph, which are solved
//! independently. Each component is searched over vehicle-to-subframe
//! placements (see [`placement`]); components whose subframes carry too
//! many resources for its packing program go to a plain column search.

mod brute;
mod model;
mod placement;
mod search;

use std::time::{Duration, Instant};

use thiserror::Error;

pub use brute::{brute_force_solve, BRUTE_FORCE_MAX_CELLS};

use crate::channel::CapacityMap;
use crate::constraints::{Assignment, ConstraintError, ConstraintSystem};
use crate::scenario::{ChannelGrid, Scenario, VehicleId};
use crate::solution::{Diagnostics, SolveResult, SolveStatus};
use model::Model;
use search::{Limits, Outcome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Wall-clock budget in seconds, 0 for none.
    pub time_limit_s: f64,
    /// Search node budget, 0 for none.
    pub node_limit: u64,
    /// Prune subtrees by their upper bound. Turning this off leaves only
    /// feasibility pruning and is meant for cross-checking.
    pub bound_pruning: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { time_limit_s: 0.0, node_limit: 0, bound_pruning: true }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("inputs do not describe the same instance: {0}")]
    InconsistentInputs(String),
    #[error("instance has {cells} assignment cells, brute force handles at most {max}")]
    InstanceTooLarge { cells: usize, max: usize },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

pub(crate) fn check_inputs(
    s: &Scenario,
    g: &ChannelGrid,
    c: &CapacityMap,
    cs: &ConstraintSystem,
) -> Result<(), SolveError> {
    if c.rates().dim() != (s.vehicle_count(), g.total_subchannels()) || c.grid() != g {
        return Err(SolveError::InconsistentInputs("capacity map does not match scenario and grid".into()));
    }
    if !cs.matches(s, g) {
        return Err(SolveError::InconsistentInputs("constraint system was built for another instance".into()));
    }
    Ok(())
}

/// Branch and bound to proven optimality, infeasibility, or a limit.
///
/// Among optimal assignments the lexicographically smallest `x` is
/// returned. On a limit the status is [`SolveStatus::Timeout`] and the best
/// assignment found so far, if any, is attached without any claim of
/// optimality.
pub fn solve_exact(
    s: &Scenario,
    g: &ChannelGrid,
    c: &CapacityMap,
    cs: &ConstraintSystem,
    opt: &SolverOptions,
) -> Result<SolveResult, SolveError> {
    solve_with(s, g, c, cs, opt, false)
}

/// `columns_only` skips the placement search, for cross-checking.
pub(crate) fn solve_with(
    s: &Scenario,
    g: &ChannelGrid,
    c: &CapacityMap,
    cs: &ConstraintSystem,
    opt: &SolverOptions,
    columns_only: bool,
) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    check_inputs(s, g, c, cs)?;
    if !(opt.time_limit_s.is_finite() && opt.time_limit_s >= 0.0) {
        return Err(SolveError::InconsistentInputs(format!("time limit {} s", opt.time_limit_s)));
    }
    if g.subchannels_per_subframe() > 8 {
        return Err(SolveError::InconsistentInputs("more than 8 subchannels per subframe".into()));
    }

    let model = Model::build(s, g, c);
    let components = model.components();
    let mut limits = Limits {
        deadline: (opt.time_limit_s > 0.0).then(|| start + Duration::from_secs_f64(opt.time_limit_s)),
        node_limit: (opt.node_limit > 0).then_some(opt.node_limit),
        nodes: 0,
        hit: false,
    };

    let k = g.subchannels_per_subframe();
    let mut assignment = Assignment::for_grid(s.vehicle_count(), g);
    let mut status = SolveStatus::Optimal;
    let mut complete = true;
    for comp in &components {
        if limits.hit {
            complete = false;
            status = SolveStatus::Timeout;
            continue;
        }
        let placed = (!columns_only)
            .then(|| placement::solve_component(&model, comp, s.qos_bps(), k, g.subframes(), opt.bound_pruning, &mut limits))
            .flatten();
        let outcome = placed
            .unwrap_or_else(|| search::solve_component(&model, comp, s.qos_bps(), k, opt.bound_pruning, &mut limits));
        let choice = match outcome {
            Outcome::Optimal(choice) => choice,
            Outcome::Infeasible => {
                status = SolveStatus::Infeasible;
                break;
            }
            Outcome::Stopped(choice) => {
                status = SolveStatus::Timeout;
                match choice {
                    Some(choice) => choice,
                    None => {
                        complete = false;
                        continue;
                    }
                }
            }
        };
        for (&v, &col) in comp.iter().zip(&choice) {
            let id = VehicleId::from_index(v);
            for sc in model.columns[v][col].subchannels(k) {
                assignment.set(id, sc, true);
            }
        }
    }

    let diagnostics = Diagnostics {
        nodes_explored: limits.nodes,
        elapsed_s: start.elapsed().as_secs_f64(),
        components: Some(components.len()),
        ..Default::default()
    };
    Ok(match status {
        SolveStatus::Infeasible => SolveResult::without_assignment(status, s.vehicle_count(), diagnostics),
        _ if !complete => SolveResult::without_assignment(status, s.vehicle_count(), diagnostics),
        _ => SolveResult::with_assignment(status, assignment, c, diagnostics),
    })
}

#[cfg(test)]
mod tests;
