//! The four allocation requirements and their verification.
//!
//! * Type I: each vehicle's achieved rate lies in `[q - eps, q + eps]`.
//! * Type II: two vehicles sharing a cluster never transmit in the same
//!   subframe (half-duplex).
//! * Type III: a vehicle's subchannels are confined to one subframe.
//! * Type IV: one-hop pairs never reuse the same subchannel.
//!
//! [`verify`] evaluates Types II-IV twice, once through the selector
//! matrices of [`ConstraintSystem`] and once directly on subframe and
//! subchannel sets, and fails loudly if the two routes disagree.

mod assignment;
pub mod matrices;

use std::collections::BTreeSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assignment::Assignment;
pub use matrices::{build_g, build_h, build_q};

use crate::channel::CapacityMap;
use crate::scenario::{intra_cluster_pairs, one_hop_pairs, ChannelGrid, Scenario, VehicleId, VehiclePair};

/// Relative slack applied to both QoS window boundaries.
pub const QOS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("{what} has shape {got:?}, expected {expected:?}")]
    ShapeMismatch { what: &'static str, expected: (usize, usize), got: (usize, usize) },
    #[error("matrix and direct checks disagree on {family}: {detail}")]
    InternalCheckerDisagreement { family: &'static str, detail: String },
    #[error("assignment row {row}, column {col}: expected 0 or 1, found {value:?}")]
    BadAssignmentCell { row: usize, col: usize, value: String },
    #[error("assignment csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("assignment io: {0}")]
    Io(#[from] std::io::Error),
}

/// Inclusive QoS window with the numeric slack used throughout the crate.
#[inline]
pub fn qos_bounds(q: f64, epsilon: f64) -> (f64, f64) {
    let slack = QOS_TOLERANCE * q;
    (q - epsilon - slack, q + epsilon + slack)
}

/// Selector matrices and the pair lists backing them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub vehicles: usize,
    pub grid: ChannelGrid,
    pub intra_pairs: Vec<VehiclePair>,
    pub hop_pairs: Vec<VehiclePair>,
    pub g_plus: Array2<u8>,
    pub g_minus: Array2<u8>,
    pub q_plus: Array2<u8>,
    pub q_minus: Array2<u8>,
    pub h_plus: Array2<u8>,
    pub h_minus: Array2<u8>,
}

impl ConstraintSystem {
    pub fn new(s: &Scenario, g: &ChannelGrid) -> Self {
        let n = s.vehicle_count();
        let intra_pairs = intra_cluster_pairs(s);
        let hop_pairs = one_hop_pairs(s);
        let (g_plus, g_minus) = build_g(&intra_pairs, n);
        let (q_plus, q_minus) = build_q(g.subframes());
        let (h_plus, h_minus) = build_h(&hop_pairs, n);
        Self { vehicles: n, grid: *g, intra_pairs, hop_pairs, g_plus, g_minus, q_plus, q_minus, h_plus, h_minus }
    }

    /// Number of intra-cluster pairs `P`.
    pub fn intra_pair_count(&self) -> usize {
        self.intra_pairs.len()
    }

    /// Number of one-hop pairs `U`.
    pub fn hop_pair_count(&self) -> usize {
        self.hop_pairs.len()
    }

    /// `[Q-]^T Q+`, the subframe-pair conflict pattern.
    pub fn q_product(&self) -> Array2<u8> {
        matrices::transpose_product(&self.q_minus, &self.q_plus)
    }

    /// Whether this system was derived from `s` and `g`.
    pub fn matches(&self, s: &Scenario, g: &ChannelGrid) -> bool {
        self.vehicles == s.vehicle_count()
            && self.grid == *g
            && self.intra_pairs == intra_cluster_pairs(s)
            && self.hop_pairs == one_hop_pairs(s)
    }
}

/// `x_s = (I_NL ⊗ 1_1xK) x`: entry `(i, l)` counts the subchannels vehicle
/// `i` uses in subframe `l`.
pub fn fold_to_subframes(a: &Assignment, g: &ChannelGrid) -> Result<Array2<u32>, ConstraintError> {
    if a.subchannel_count() != g.total_subchannels() {
        return Err(ConstraintError::ShapeMismatch {
            what: "assignment",
            expected: (a.vehicle_count(), g.total_subchannels()),
            got: (a.vehicle_count(), a.subchannel_count()),
        });
    }
    let k = g.subchannels_per_subframe();
    let folded: Vec<u32> = a.as_slice().chunks(k).map(|chunk| chunk.iter().map(|&b| u32::from(b)).sum()).collect();
    Ok(Array2::from_shape_vec((a.vehicle_count(), g.subframes()), folded).expect("chunk count is N*L"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosViolation {
    pub vehicle: VehicleId,
    pub achieved_bps: f64,
    pub window_bps: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubframeClash {
    pub pair: VehiclePair,
    pub subframe: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeDispersion {
    pub vehicle: VehicleId,
    pub subframes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubchannelClash {
    pub pair: VehiclePair,
    pub subchannel: usize,
}

/// Every violation found in an assignment. Empty iff all four requirement
/// types hold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub qos_violations: Vec<QosViolation>,
    pub type2: Vec<SubframeClash>,
    pub type3: Vec<TimeDispersion>,
    pub type4: Vec<SubchannelClash>,
}

impl ConflictReport {
    pub fn is_empty(&self) -> bool {
        self.qos_violations.is_empty() && self.is_conflict_free()
    }

    /// No Type II, III or IV violation (QoS ignored).
    pub fn is_conflict_free(&self) -> bool {
        self.type2.is_empty() && self.type3.is_empty() && self.type4.is_empty()
    }
}

/// Checks `a` against all four requirement types.
pub fn verify(
    a: &Assignment,
    s: &Scenario,
    g: &ChannelGrid,
    c: &CapacityMap,
    cs: &ConstraintSystem,
) -> Result<ConflictReport, ConstraintError> {
    let n = s.vehicle_count();
    let kl = g.total_subchannels();
    if a.vehicle_count() != n || a.subchannel_count() != kl {
        return Err(ConstraintError::ShapeMismatch {
            what: "assignment",
            expected: (n, kl),
            got: (a.vehicle_count(), a.subchannel_count()),
        });
    }
    if c.rates().dim() != (n, kl) {
        return Err(ConstraintError::ShapeMismatch { what: "capacity map", expected: (n, kl), got: c.rates().dim() });
    }
    if cs.vehicles != n || cs.grid != *g {
        return Err(ConstraintError::ShapeMismatch {
            what: "constraint system",
            expected: (n, g.subframes()),
            got: (cs.vehicles, cs.grid.subframes()),
        });
    }

    let direct = DirectCheck::run(a, s, g, cs);
    let matrix = MatrixCheck::run(a, g, cs)?;
    matrix.agree_with(&direct)?;

    let qos_violations = s
        .vehicles()
        .filter_map(|id| {
            let achieved = a.rate(c, id);
            let (lo, hi) = qos_bounds(s.qos(id), s.epsilon_bps());
            (achieved < lo || achieved > hi).then(|| QosViolation {
                vehicle: id,
                achieved_bps: achieved,
                window_bps: s.qos_window(id),
            })
        })
        .collect();

    Ok(ConflictReport {
        qos_violations,
        type2: direct.type2.into_iter().map(|(_, c)| c).collect(),
        type3: direct.type3,
        type4: direct.type4.into_iter().map(|(_, c)| c).collect(),
    })
}

/// Set-based evaluation straight from the definitions. Entries carry the
/// index of the pair in the constraint system's pair list.
struct DirectCheck {
    type2: Vec<(usize, SubframeClash)>,
    type3: Vec<TimeDispersion>,
    type4: Vec<(usize, SubchannelClash)>,
}

impl DirectCheck {
    fn run(a: &Assignment, s: &Scenario, g: &ChannelGrid, cs: &ConstraintSystem) -> Self {
        let subframes: Vec<BTreeSet<usize>> =
            s.vehicles().map(|id| a.subchannels_of(id).map(|k| g.subframe_of(k)).collect()).collect();
        let subchannels: Vec<BTreeSet<usize>> = s.vehicles().map(|id| a.subchannels_of(id).collect()).collect();

        let mut type2 = Vec::new();
        for (p, pair) in cs.intra_pairs.iter().enumerate() {
            let (y, z) = (&subframes[pair.first.index()], &subframes[pair.second.index()]);
            type2.extend(y.intersection(z).map(|&l| (p, SubframeClash { pair: *pair, subframe: l })));
        }

        let type3 = s
            .vehicles()
            .zip(&subframes)
            .filter(|(_, set)| set.len() > 1)
            .map(|(vehicle, set)| TimeDispersion { vehicle, subframes: set.iter().copied().collect() })
            .collect();

        let mut type4 = Vec::new();
        for (u, pair) in cs.hop_pairs.iter().enumerate() {
            let (i, ip) = (&subchannels[pair.first.index()], &subchannels[pair.second.index()]);
            type4.extend(i.intersection(ip).map(|&k| (u, SubchannelClash { pair: *pair, subchannel: k })));
        }

        Self { type2, type3, type4 }
    }
}

/// Hadamard residuals of the three matrix constraints; a constraint holds
/// iff its residual is all zero.
struct MatrixCheck {
    subframes: usize,
    subchannels: usize,
    type2: Vec<u32>,
    type3: Vec<u32>,
    type4: Vec<u32>,
}

impl MatrixCheck {
    fn run(a: &Assignment, g: &ChannelGrid, cs: &ConstraintSystem) -> Result<Self, ConstraintError> {
        let n = a.vehicle_count();
        let l = g.subframes();
        let kl = g.total_subchannels();
        let x: Vec<u32> = a.as_slice().iter().map(|&b| u32::from(b)).collect();
        let xs: Vec<u32> = fold_to_subframes(a, g)?.into_iter().collect();

        let hadamard = |u: Vec<u32>, v: Vec<u32>| u.iter().zip(&v).map(|(p, q)| p * q).collect::<Vec<_>>();
        let type2 = hadamard(
            matrices::kron_identity_apply(&cs.g_plus, l, &xs)?,
            matrices::kron_identity_apply(&cs.g_minus, l, &xs)?,
        );
        let type3 = hadamard(
            matrices::identity_kron_apply(n, &cs.q_plus, &xs)?,
            matrices::identity_kron_apply(n, &cs.q_minus, &xs)?,
        );
        let type4 = hadamard(
            matrices::kron_identity_apply(&cs.h_plus, kl, &x)?,
            matrices::kron_identity_apply(&cs.h_minus, kl, &x)?,
        );
        Ok(Self { subframes: l, subchannels: kl, type2, type3, type4 })
    }

    fn agree_with(&self, direct: &DirectCheck) -> Result<(), ConstraintError> {
        fn nonzero(v: &[u32], width: usize) -> BTreeSet<(usize, usize)> {
            v.iter().enumerate().filter(|(_, &r)| r != 0).map(|(ix, _)| (ix / width, ix % width)).collect()
        }
        fn check<T: PartialEq + std::fmt::Debug>(family: &'static str, m: T, d: T) -> Result<(), ConstraintError> {
            if m == d {
                Ok(())
            } else {
                Err(ConstraintError::InternalCheckerDisagreement {
                    family,
                    detail: format!("matrix route {m:?}, direct route {d:?}"),
                })
            }
        }

        let d2: BTreeSet<_> = direct.type2.iter().map(|(p, c)| (*p, c.subframe)).collect();
        check("type II", nonzero(&self.type2, self.subframes), d2)?;

        // Row (i, l) of the Type III residual fires when vehicle i uses l and
        // some earlier subframe, so only the per-vehicle projection matches.
        let m3: BTreeSet<usize> = nonzero(&self.type3, self.subframes).into_iter().map(|(i, _)| i).collect();
        let d3: BTreeSet<usize> = direct.type3.iter().map(|t| t.vehicle.index()).collect();
        check("type III", m3, d3)?;

        let d4: BTreeSet<_> = direct.type4.iter().map(|(u, c)| (*u, c.subchannel)).collect();
        check("type IV", nonzero(&self.type4, self.subchannels), d4)
    }
}
