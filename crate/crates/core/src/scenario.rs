//! Vehicles, clusters, QoS demands and the sidelink channelization grid.
//!
//! A [`ChannelGrid`] describes an allocation window of `L` subframes, each
//! holding `K` subchannels of bandwidth `B`. Subchannels are addressed by a
//! global 0-based index `k`; subframe `l` owns the contiguous block
//! `l*K .. (l+1)*K`.
//!
//! A [`Scenario`] lists the vehicles (1-based dense ids), the clusters they
//! belong to (clusters may overlap), each vehicle's demanded rate and the
//! QoS tolerance. The two pair derivations, [`intra_cluster_pairs`] and
//! [`one_hop_pairs`], parameterize the conflict constraints.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default subchannel bandwidth (14 resource blocks).
pub const DEFAULT_BANDWIDTH_HZ: f64 = 1.26e6;
/// Total sidelink spectrum available for the subchannels of one subframe.
pub const MAX_SPECTRUM_HZ: f64 = 10e6;
/// Duration of one subframe.
pub const SUBFRAME_DURATION_S: f64 = 1e-3;

/// 1-based vehicle identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl VehicleId {
    /// 0-based row index of this vehicle in matrices and vectors.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(index: usize) -> Self {
        VehicleId(index as u32 + 1)
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("grid must have at least one subframe and one subchannel (got L={subframes}, K={subchannels})")]
    EmptyGrid { subframes: usize, subchannels: usize },
    #[error("bandwidth must be positive and finite (got {0} Hz)")]
    InvalidBandwidth(f64),
    #[error("{subchannels} subchannels of {bandwidth_hz} Hz exceed the 10 MHz sidelink channel")]
    SpectrumExceeded { subchannels: usize, bandwidth_hz: f64 },
    #[error("scenario has no vehicles")]
    NoVehicles,
    #[error("scenario has no clusters")]
    NoClusters,
    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },
    #[error("cluster {cluster} references unknown vehicle id {id} (vehicles are 1..={vehicles})")]
    UnknownVehicleId { cluster: usize, id: u32, vehicles: usize },
    #[error("cluster {cluster} lists vehicle {id} more than once")]
    DuplicateMember { cluster: usize, id: VehicleId },
    #[error("vehicle {id} is not a member of any cluster")]
    UnclusteredVehicle { id: VehicleId },
    #[error("expected {expected} QoS demands, got {got}")]
    QosLengthMismatch { expected: usize, got: usize },
    #[error("vehicle {id} has non-positive QoS demand {value} bit/s")]
    NonPositiveQos { id: VehicleId, value: f64 },
    #[error("QoS tolerance must be non-negative and finite (got {0} bit/s)")]
    NegativeEpsilon(f64),
}

/// `L` subframes by `K` subchannels of bandwidth `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGrid {
    subframes: usize,
    subchannels: usize,
    bandwidth_hz: f64,
}

impl ChannelGrid {
    pub fn new(subframes: usize, subchannels: usize, bandwidth_hz: f64) -> Result<Self, ScenarioError> {
        if subframes == 0 || subchannels == 0 {
            return Err(ScenarioError::EmptyGrid { subframes, subchannels });
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(ScenarioError::InvalidBandwidth(bandwidth_hz));
        }
        // Small slack so that e.g. 7 x 1.26 MHz (8.82 MHz) and exact fits pass.
        if subchannels as f64 * bandwidth_hz > MAX_SPECTRUM_HZ * (1.0 + 1e-12) {
            return Err(ScenarioError::SpectrumExceeded { subchannels, bandwidth_hz });
        }
        Ok(Self { subframes, subchannels, bandwidth_hz })
    }

    /// Grid with the default 1.26 MHz subchannel bandwidth.
    pub fn with_default_bandwidth(subframes: usize, subchannels: usize) -> Result<Self, ScenarioError> {
        Self::new(subframes, subchannels, DEFAULT_BANDWIDTH_HZ)
    }

    /// Number of subframes `L`.
    #[inline]
    pub fn subframes(&self) -> usize {
        self.subframes
    }

    /// Subchannels per subframe `K`.
    #[inline]
    pub fn subchannels_per_subframe(&self) -> usize {
        self.subchannels
    }

    #[inline]
    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    #[inline]
    pub fn subframe_duration_s(&self) -> f64 {
        SUBFRAME_DURATION_S
    }

    /// Total number of subchannels `K*L` in the allocation window.
    #[inline]
    pub fn total_subchannels(&self) -> usize {
        self.subframes * self.subchannels
    }

    /// Subframe owning global subchannel `k` (both 0-based).
    #[inline]
    pub fn subframe_of(&self, k: usize) -> usize {
        k / self.subchannels
    }

    /// Global indices of the subchannels in subframe `l`.
    #[inline]
    pub fn subchannels_of(&self, l: usize) -> std::ops::Range<usize> {
        l * self.subchannels..(l + 1) * self.subchannels
    }
}

/// Whether a vehicle pair is constrained by half-duplex (same cluster) or
/// hidden-node (one hop across intersecting clusters) conflicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    IntraCluster,
    OneHop,
}

/// Unordered vehicle pair stored in canonical order (`first < second`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VehiclePair {
    pub first: VehicleId,
    pub second: VehicleId,
    pub kind: PairKind,
}

impl VehiclePair {
    pub fn new(a: VehicleId, b: VehicleId, kind: PairKind) -> Self {
        debug_assert_ne!(a, b);
        let (first, second) = if a < b { (a, b) } else { (b, a) };
        Self { first, second, kind }
    }
}

impl fmt::Display for VehiclePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first, self.second)
    }
}

/// Unvalidated scenario description, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawScenario {
    pub vehicles: usize,
    pub clusters: Vec<Vec<u32>>,
    /// Per-vehicle demand in bit/s, indexed by vehicle id - 1.
    pub qos_bps: Vec<f64>,
    pub epsilon_bps: f64,
}

/// A validated set of vehicles, clusters and QoS demands. Immutable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    vehicles: usize,
    clusters: Vec<Vec<VehicleId>>,
    qos_bps: Vec<f64>,
    epsilon_bps: f64,
}

impl Scenario {
    /// Validates a raw description. Cluster members are stored sorted.
    pub fn new(raw: RawScenario) -> Result<Self, ScenarioError> {
        let RawScenario { vehicles, clusters, qos_bps, epsilon_bps } = raw;
        if vehicles == 0 {
            return Err(ScenarioError::NoVehicles);
        }
        if clusters.is_empty() {
            return Err(ScenarioError::NoClusters);
        }
        let mut covered = vec![false; vehicles];
        let mut validated = Vec::with_capacity(clusters.len());
        for (j, members) in clusters.into_iter().enumerate() {
            if members.is_empty() {
                return Err(ScenarioError::EmptyCluster { cluster: j + 1 });
            }
            let mut seen = BTreeSet::new();
            for &id in &members {
                if id == 0 || id as usize > vehicles {
                    return Err(ScenarioError::UnknownVehicleId { cluster: j + 1, id, vehicles });
                }
                if !seen.insert(VehicleId(id)) {
                    return Err(ScenarioError::DuplicateMember { cluster: j + 1, id: VehicleId(id) });
                }
                covered[id as usize - 1] = true;
            }
            validated.push(seen.into_iter().collect::<Vec<_>>());
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(ScenarioError::UnclusteredVehicle { id: VehicleId::from_index(i) });
        }
        if qos_bps.len() != vehicles {
            return Err(ScenarioError::QosLengthMismatch { expected: vehicles, got: qos_bps.len() });
        }
        for (i, &q) in qos_bps.iter().enumerate() {
            if !(q.is_finite() && q > 0.0) {
                return Err(ScenarioError::NonPositiveQos { id: VehicleId::from_index(i), value: q });
            }
        }
        if !(epsilon_bps.is_finite() && epsilon_bps >= 0.0) {
            return Err(ScenarioError::NegativeEpsilon(epsilon_bps));
        }
        Ok(Self { vehicles, clusters: validated, qos_bps, epsilon_bps })
    }

    /// Number of vehicles `N`.
    #[inline]
    pub fn vehicle_count(&self) -> usize {
        self.vehicles
    }

    pub fn vehicles(&self) -> impl Iterator<Item = VehicleId> + '_ {
        (0..self.vehicles).map(VehicleId::from_index)
    }

    /// Cluster member lists, each sorted ascending.
    #[inline]
    pub fn clusters(&self) -> &[Vec<VehicleId>] {
        &self.clusters
    }

    #[inline]
    pub fn qos_bps(&self) -> &[f64] {
        &self.qos_bps
    }

    #[inline]
    pub fn qos(&self, id: VehicleId) -> f64 {
        self.qos_bps[id.index()]
    }

    #[inline]
    pub fn epsilon_bps(&self) -> f64 {
        self.epsilon_bps
    }

    /// Same vehicles and clusters with a different tolerance.
    pub fn with_epsilon(&self, epsilon_bps: f64) -> Result<Self, ScenarioError> {
        Scenario::new(RawScenario {
            vehicles: self.vehicles,
            clusters: self.clusters.iter().map(|c| c.iter().map(|v| v.0).collect()).collect(),
            qos_bps: self.qos_bps.clone(),
            epsilon_bps,
        })
    }

    /// Admissible rate window `[q - eps, q + eps]` of a vehicle, before any
    /// numeric tolerance is applied.
    #[inline]
    pub fn qos_window(&self, id: VehicleId) -> (f64, f64) {
        let q = self.qos(id);
        (q - self.epsilon_bps, q + self.epsilon_bps)
    }

    /// Indices of the clusters containing `id`.
    pub fn clusters_of(&self, id: VehicleId) -> Vec<usize> {
        self.clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.binary_search(&id).is_ok())
            .map(|(j, _)| j)
            .collect()
    }

    pub fn contains(&self, cluster: usize, id: VehicleId) -> bool {
        self.clusters[cluster].binary_search(&id).is_ok()
    }
}

/// Every unordered pair of vehicles that share at least one cluster,
/// deduplicated, in lexicographic order.
pub fn intra_cluster_pairs(s: &Scenario) -> Vec<VehiclePair> {
    let mut pairs = BTreeSet::new();
    for cluster in s.clusters() {
        for (a, &y) in cluster.iter().enumerate() {
            for &z in &cluster[a + 1..] {
                pairs.insert((y, z));
            }
        }
    }
    pairs
        .into_iter()
        .map(|(y, z)| VehiclePair::new(y, z, PairKind::IntraCluster))
        .collect()
}

/// Pairs of vehicles sitting in two different, intersecting clusters but
/// outside their intersection.
///
/// For every pair of clusters `(j, j')` with a nonempty intersection, each
/// member of `V(j) \ V(j')` is paired with each member of `V(j') \ V(j)`.
/// Clusters that are only linked through a chain of intersections do not
/// produce pairs.
pub fn one_hop_pairs(s: &Scenario) -> Vec<VehiclePair> {
    let clusters = s.clusters();
    let mut pairs = BTreeSet::new();
    for j in 0..clusters.len() {
        for jp in j + 1..clusters.len() {
            let (a, b) = (&clusters[j], &clusters[jp]);
            let intersects = a.iter().any(|v| b.binary_search(v).is_ok());
            if !intersects {
                continue;
            }
            let only_a: Vec<_> = a.iter().filter(|v| b.binary_search(v).is_err()).collect();
            let only_b: Vec<_> = b.iter().filter(|v| a.binary_search(v).is_err()).collect();
            for &&y in &only_a {
                for &&z in &only_b {
                    pairs.insert(if y < z { (y, z) } else { (z, y) });
                }
            }
        }
    }
    // A vehicle outside an intersection may still share a third cluster with
    // its hop partner; such pairs are already half-duplex constrained.
    let intra: BTreeSet<_> = intra_cluster_pairs(s).into_iter().map(|p| (p.first, p.second)).collect();
    pairs
        .into_iter()
        .filter(|p| !intra.contains(p))
        .map(|(y, z)| VehiclePair::new(y, z, PairKind::OneHop))
        .collect()
}
