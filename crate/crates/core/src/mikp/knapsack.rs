//! Per-vehicle subchannel selection as a subset-sum problem: choose
//! subchannels of one subframe whose total rate is as large as possible
//! without exceeding the vehicle's demand.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::MikpError;

/// Default DP resolution, 10 kbit/s.
pub const DEFAULT_RESOLUTION_BPS: f64 = 10e3;

/// Largest item count accepted by [`knapsack_brute`].
pub const BRUTE_FORCE_MAX_ITEMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnapsackItem {
    pub subchannel: usize,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub items: Vec<KnapsackItem>,
    pub budget_bps: f64,
    pub forbidden: BTreeSet<usize>,
}

impl KnapsackInstance {
    /// Items that may be picked at all: not forbidden, positive, and each
    /// within the budget on its own.
    pub fn admissible(&self) -> impl Iterator<Item = &KnapsackItem> + '_ {
        self.items.iter().filter(|it| {
            !self.forbidden.contains(&it.subchannel) && it.rate_bps > 0.0 && it.rate_bps <= self.budget_bps
        })
    }
}

/// A chosen subset, ids ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub subchannels: Vec<usize>,
    pub total_bps: f64,
}

impl Selection {
    pub fn empty() -> Self {
        Self { subchannels: Vec::new(), total_bps: 0.0 }
    }
}

/// Larger total first, then fewer items, then lexicographically smaller ids.
fn better(total: f64, ids: &[usize], than_total: f64, than_ids: &[usize]) -> bool {
    match total.partial_cmp(&than_total).unwrap_or(Ordering::Equal) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (ids.len(), ids) < (than_ids.len(), than_ids),
    }
}

fn ids_of(items: &[&KnapsackItem], mask: u64) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..items.len()).filter(|b| mask >> b & 1 == 1).map(|b| items[b].subchannel).collect();
    ids.sort_unstable();
    ids
}

#[derive(Clone, Copy)]
struct Cell {
    total: f64,
    mask: u64,
}

/// Dynamic program over rate buckets of width `resolution_bps`.
///
/// Bucket `b` holds the smallest subset sum seen in `[b*res, (b+1)*res)`.
/// Sums are exact, so the answer never exceeds the budget, and keeping the
/// smallest representative per bucket loses less than one bucket width per
/// item: the result is within `items * resolution` of the true optimum.
///
/// # Panics
///
/// If `resolution_bps` is not positive and finite, or the instance has more
/// than 64 admissible items.
pub fn knapsack_select(inst: &KnapsackInstance, resolution_bps: f64) -> Selection {
    assert!(resolution_bps.is_finite() && resolution_bps > 0.0, "knapsack resolution must be positive");
    let items: Vec<&KnapsackItem> = inst.admissible().collect();
    assert!(items.len() <= 64, "at most 64 admissible knapsack items");
    if items.is_empty() {
        return Selection::empty();
    }

    let buckets = (inst.budget_bps / resolution_bps).floor() as usize + 1;
    let bucket_of = |total: f64| ((total / resolution_bps).floor() as usize).min(buckets - 1);
    let mut table: Vec<Option<Cell>> = vec![None; buckets];
    table[0] = Some(Cell { total: 0.0, mask: 0 });
    let mut best = Cell { total: 0.0, mask: 0 };
    let mut best_ids = Vec::new();

    for (bit, item) in items.iter().enumerate() {
        let snapshot = table.clone();
        for cell in snapshot.iter().flatten() {
            let total = cell.total + item.rate_bps;
            if total > inst.budget_bps {
                continue;
            }
            let cand = Cell { total, mask: cell.mask | 1 << bit };
            let slot = &mut table[bucket_of(total)];
            let replace = match slot {
                None => true,
                Some(cur) => {
                    total < cur.total
                        || (total == cur.total && {
                            let (a, b) = (ids_of(&items, cand.mask), ids_of(&items, cur.mask));
                            (a.len(), a) < (b.len(), b)
                        })
                }
            };
            if replace {
                *slot = Some(cand);
            }
            if total >= best.total {
                let ids = ids_of(&items, cand.mask);
                if better(total, &ids, best.total, &best_ids) {
                    best = cand;
                    best_ids = ids;
                }
            }
        }
    }
    Selection { subchannels: best_ids, total_bps: best.total }
}

/// Exact optimum by enumerating every subset of the admissible items,
/// with the same tie-breaking as [`knapsack_select`].
pub fn knapsack_brute(inst: &KnapsackInstance) -> Result<Selection, MikpError> {
    if inst.items.len() > BRUTE_FORCE_MAX_ITEMS {
        return Err(MikpError::InstanceTooLarge { items: inst.items.len(), max: BRUTE_FORCE_MAX_ITEMS });
    }
    let items: Vec<&KnapsackItem> = inst.admissible().collect();
    let mut best = Selection::empty();
    for mask in 1u64..(1 << items.len()) {
        // Sum in item order, as the DP does, so equal subsets give equal bits.
        let total: f64 = (0..items.len()).filter(|b| mask >> b & 1 == 1).map(|b| items[b].rate_bps).sum();
        if total > inst.budget_bps {
            continue;
        }
        let ids = ids_of(&items, mask);
        if better(total, &ids, best.total_bps, &best.subchannels) {
            best = Selection { subchannels: ids, total_bps: total };
        }
    }
    Ok(best)
}
