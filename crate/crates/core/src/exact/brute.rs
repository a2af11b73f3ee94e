//! Exhaustive oracle over raw boolean `x`.
//!
//! Rows violating a per-vehicle requirement (QoS window or a single
//! subframe) are dropped up front, pairs are checked as rows are stacked,
//! and every candidate that would become the incumbent is confirmed by
//! [`verify`].

use std::time::Instant;

use super::{check_inputs, SolveError};
use crate::channel::CapacityMap;
use crate::constraints::{qos_bounds, verify, Assignment, ConstraintSystem};
use crate::scenario::{ChannelGrid, PairKind, Scenario, VehicleId};
use crate::solution::{Diagnostics, SolveResult, SolveStatus};

/// Largest `N * K * L` accepted by [`brute_force_solve`].
pub const BRUTE_FORCE_MAX_CELLS: usize = 16;

struct Row {
    bits: u32,
    subframe: Option<usize>,
}

struct Enumeration<'a> {
    s: &'a Scenario,
    g: &'a ChannelGrid,
    c: &'a CapacityMap,
    cs: &'a ConstraintSystem,
    rows: Vec<Vec<Row>>,
    /// Earlier vehicles paired with each vehicle.
    partners: Vec<Vec<(usize, PairKind)>>,
    pick: Vec<usize>,
    best: Option<(f64, Assignment)>,
    leaves: u64,
}

impl Enumeration<'_> {
    fn compatible(&self, i: usize, row: &Row) -> bool {
        self.partners[i].iter().all(|&(j, kind)| {
            let other = &self.rows[j][self.pick[j]];
            match kind {
                PairKind::IntraCluster => row.subframe.is_none() || row.subframe != other.subframe,
                PairKind::OneHop => row.bits & other.bits == 0,
            }
        })
    }

    fn descend(&mut self, i: usize) -> Result<(), SolveError> {
        if i == self.rows.len() {
            self.leaves += 1;
            return self.leaf();
        }
        for r in 0..self.rows[i].len() {
            if self.compatible(i, &self.rows[i][r]) {
                self.pick[i] = r;
                self.descend(i + 1)?;
            }
        }
        Ok(())
    }

    fn leaf(&mut self) -> Result<(), SolveError> {
        let kl = self.g.total_subchannels();
        let mut a = Assignment::for_grid(self.rows.len(), self.g);
        for (i, &r) in self.pick.iter().enumerate() {
            let bits = self.rows[i][r].bits;
            for k in (0..kl).filter(|k| bits >> k & 1 == 1) {
                a.set(VehicleId::from_index(i), k, true);
            }
        }
        let value = a.objective(self.c);
        let improves = match &self.best {
            None => true,
            Some((best, incumbent)) => {
                let tol = 1e-9 * best.abs().max(1.0);
                value > best + tol || (value >= best - tol && a < *incumbent)
            }
        };
        if improves && verify(&a, self.s, self.g, self.c, self.cs)?.is_empty() {
            self.best = Some((value, a));
        }
        Ok(())
    }
}

/// Enumerates every boolean `x` of an instance with `N * K * L <= 16`.
///
/// Returns [`SolveStatus::Optimal`] with the lexicographically smallest
/// maximiser, or [`SolveStatus::Infeasible`].
pub fn brute_force_solve(
    s: &Scenario,
    g: &ChannelGrid,
    c: &CapacityMap,
    cs: &ConstraintSystem,
) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let n = s.vehicle_count();
    let kl = g.total_subchannels();
    let cells = n * kl;
    if cells > BRUTE_FORCE_MAX_CELLS {
        return Err(SolveError::InstanceTooLarge { cells, max: BRUTE_FORCE_MAX_CELLS });
    }
    check_inputs(s, g, c, cs)?;

    let rows: Vec<Vec<Row>> = s
        .vehicles()
        .map(|v| {
            let (lo, hi) = qos_bounds(s.qos(v), s.epsilon_bps());
            (0u32..1 << kl)
                .filter_map(|bits| {
                    let ks: Vec<usize> = (0..kl).filter(|k| bits >> k & 1 == 1).collect();
                    let subframe = ks.first().map(|&k| g.subframe_of(k));
                    if ks.iter().any(|&k| Some(g.subframe_of(k)) != subframe) {
                        return None;
                    }
                    let rate: f64 = ks.iter().map(|&k| c.rate(v, k)).sum();
                    (lo <= rate && rate <= hi).then_some(Row { bits, subframe })
                })
                .collect()
        })
        .collect();

    let mut partners = vec![Vec::new(); n];
    for (pairs, kind) in [(&cs.intra_pairs, PairKind::IntraCluster), (&cs.hop_pairs, PairKind::OneHop)] {
        for p in pairs.iter() {
            partners[p.second.index()].push((p.first.index(), kind));
        }
    }

    let mut e = Enumeration { s, g, c, cs, rows, partners, pick: vec![0; n], best: None, leaves: 0 };
    if e.rows.iter().all(|r| !r.is_empty()) {
        e.descend(0)?;
    }

    let diagnostics =
        Diagnostics { nodes_explored: e.leaves, elapsed_s: start.elapsed().as_secs_f64(), ..Default::default() };
    Ok(match e.best {
        Some((_, a)) => SolveResult::with_assignment(SolveStatus::Optimal, a, c, diagnostics),
        None => SolveResult::without_assignment(SolveStatus::Infeasible, n, diagnostics),
    })
}
