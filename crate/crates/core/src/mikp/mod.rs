//! Three-stage heuristic cast as multiple independent knapsack problems.
//!
//! 1. Clusters are processed in descending order of cardinality.
//! 2. Within a cluster, every vehicle not yet placed is matched to a random
//!    subframe that no other member of the cluster occupies. Vehicles
//!    already placed while processing an earlier, overlapping cluster keep
//!    their subframe.
//! 3. Each newly placed vehicle picks subchannels of its subframe by
//!    solving a subset-sum knapsack with budget `q_i`, skipping subchannels
//!    already taken by its one-hop partners.
//!
//! Stage 2 rules out half-duplex and time-dispersion conflicts and stage 3
//! rules out hidden-node reuse, so every allocation it returns is
//! conflict-free. Rates are capped at `q_i` but may fall below `q_i - eps`.

pub mod knapsack;

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use knapsack::{
    knapsack_brute, knapsack_select, KnapsackInstance, KnapsackItem, Selection, DEFAULT_RESOLUTION_BPS,
};

use crate::channel::CapacityMap;
use crate::constraints::{Assignment, ConstraintSystem};
use crate::scenario::{ChannelGrid, Scenario, VehicleId};
use crate::solution::{Diagnostics, SolveResult, SolveStatus};

/// RNG stream used for the heuristic's random matching, kept apart from the
/// channel model's stream when both are seeded with the same trial seed.
pub const MATCHING_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MikpError {
    #[error("cluster {cluster} needs {needed} free subframes but only {available} remain")]
    InsufficientSubframes { cluster: usize, needed: usize, available: usize },
    #[error("knapsack instance has {items} items, brute force handles at most {max}")]
    InstanceTooLarge { items: usize, max: usize },
    #[error("inputs do not describe the same instance: {0}")]
    InconsistentInputs(String),
}

/// Vehicle-to-subframe matching built up cluster by cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubframeMatching {
    subframe: Vec<Option<usize>>,
}

impl SubframeMatching {
    pub fn new(vehicles: usize) -> Self {
        Self { subframe: vec![None; vehicles] }
    }

    #[inline]
    pub fn subframe_of(&self, id: VehicleId) -> Option<usize> {
        self.subframe[id.index()]
    }

    /// Subframes occupied by members of `cluster`.
    pub fn used_by(&self, cluster: &[VehicleId]) -> BTreeSet<usize> {
        cluster.iter().filter_map(|&v| self.subframe_of(v)).collect()
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.subframe
    }
}

/// Cluster indices by descending cardinality; equal sizes keep their
/// original order.
pub fn sort_clusters(s: &Scenario) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.clusters().len()).collect();
    order.sort_by_key(|&j| std::cmp::Reverse(s.clusters()[j].len()));
    order
}

/// Stage 2 for one cluster. `cluster_index` only labels errors.
pub fn match_subframes<R: Rng + ?Sized>(
    cluster_index: usize,
    cluster: &[VehicleId],
    matching: &mut SubframeMatching,
    subframes: usize,
    rng: &mut R,
) -> Result<(), MikpError> {
    let used = matching.used_by(cluster);
    let free: Vec<usize> = (0..subframes).filter(|l| !used.contains(l)).collect();
    let pending: Vec<VehicleId> = cluster.iter().copied().filter(|&v| matching.subframe_of(v).is_none()).collect();
    if pending.len() > free.len() {
        return Err(MikpError::InsufficientSubframes {
            cluster: cluster_index + 1,
            needed: pending.len(),
            available: free.len(),
        });
    }
    let picks = index::sample(rng, free.len(), pending.len());
    for (v, pick) in pending.into_iter().zip(picks.iter()) {
        matching.subframe[v.index()] = Some(free[pick]);
    }
    Ok(())
}

fn hop_partners(s: &Scenario, cs: &ConstraintSystem) -> Vec<Vec<VehicleId>> {
    let mut partners = vec![Vec::new(); s.vehicle_count()];
    for pair in &cs.hop_pairs {
        partners[pair.first.index()].push(pair.second);
        partners[pair.second.index()].push(pair.first);
    }
    partners
}

/// Runs all three stages. The random matching draws from
/// `ChaCha8Rng::seed_from_u64(seed)` on stream [`MATCHING_STREAM`].
pub fn run_mikp(
    s: &Scenario,
    g: &ChannelGrid,
    c: &CapacityMap,
    cs: &ConstraintSystem,
    seed: u64,
    resolution_bps: f64,
) -> Result<SolveResult, MikpError> {
    let start = Instant::now();
    if c.rates().dim() != (s.vehicle_count(), g.total_subchannels()) || c.grid() != g {
        return Err(MikpError::InconsistentInputs("capacity map does not match scenario and grid".into()));
    }
    if !cs.matches(s, g) {
        return Err(MikpError::InconsistentInputs("constraint system was built for another instance".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(MATCHING_STREAM);
    let partners = hop_partners(s, cs);
    let mut matching = SubframeMatching::new(s.vehicle_count());
    let mut allocated = vec![false; s.vehicle_count()];
    let mut assignment = Assignment::for_grid(s.vehicle_count(), g);
    let mut blocked = Vec::new();
    let mut knapsacks = 0u64;

    for j in sort_clusters(s) {
        let cluster = &s.clusters()[j];
        match_subframes(j, cluster, &mut matching, g.subframes(), &mut rng)?;

        for &v in cluster {
            if allocated[v.index()] {
                continue;
            }
            let l = matching.subframe_of(v).expect("matched in stage 2");
            let forbidden: BTreeSet<usize> =
                partners[v.index()].iter().flat_map(|&p| assignment.subchannels_of(p).collect::<Vec<_>>()).collect();
            let inst = KnapsackInstance {
                items: g.subchannels_of(l).map(|k| KnapsackItem { subchannel: k, rate_bps: c.rate(v, k) }).collect(),
                budget_bps: s.qos(v),
                forbidden,
            };
            if inst.admissible().next().is_none() {
                blocked.push(v);
            }
            let sel = knapsack_select(&inst, resolution_bps);
            knapsacks += 1;
            for k in sel.subchannels {
                assignment.set(v, k, true);
            }
            allocated[v.index()] = true;
        }
    }

    let diagnostics = Diagnostics {
        nodes_explored: knapsacks,
        elapsed_s: start.elapsed().as_secs_f64(),
        components: None,
        matched_subframes: Some(matching.as_slice().to_vec()),
        blocked,
    };
    Ok(SolveResult::with_assignment(SolveStatus::Heuristic, assignment, c, diagnostics))
}
