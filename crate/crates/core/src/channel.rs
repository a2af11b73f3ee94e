//! Achievable rates `c_ik = B log2(1 + SINR_ik)` for every vehicle and
//! subchannel, drawn from a seeded synthetic SINR model.

use ndarray::Array2;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{ChannelGrid, Scenario, VehicleId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("capacity input is not finite or out of range (sinr={sinr}, bandwidth={bandwidth_hz} Hz)")]
    NonFiniteInput { sinr: f64, bandwidth_hz: f64 },
    #[error("SINR range is empty or not finite: [{min_db}, {max_db}] dB")]
    InvalidSinrRange { min_db: f64, max_db: f64 },
    #[error("capacity matrix has shape {got:?}, expected {expected:?}")]
    ShapeMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("capacity entry ({row}, {col}) is negative or not finite: {value}")]
    InvalidRate { row: usize, col: usize, value: f64 },
}

/// Shannon rate of one subchannel.
pub fn capacity_of(sinr_linear: f64, bandwidth_hz: f64) -> Result<f64, ChannelError> {
    if !(sinr_linear.is_finite() && sinr_linear >= 0.0 && bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
        return Err(ChannelError::NonFiniteInput { sinr: sinr_linear, bandwidth_hz });
    }
    Ok(bandwidth_hz * (1.0 + sinr_linear).log2())
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrDistribution {
    /// SINR in dB drawn uniformly from `[sinr_min_db, sinr_max_db]`.
    #[default]
    UniformDb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModelParams {
    pub sinr_min_db: f64,
    pub sinr_max_db: f64,
    #[serde(default)]
    pub distribution: SinrDistribution,
    pub seed: u64,
}

impl Default for ChannelModelParams {
    fn default() -> Self {
        Self { sinr_min_db: 0.0, sinr_max_db: 20.0, distribution: SinrDistribution::UniformDb, seed: 0 }
    }
}

impl ChannelModelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let (lo, hi) = (self.sinr_min_db, self.sinr_max_db);
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ChannelError::InvalidSinrRange { min_db: lo, max_db: hi });
        }
        Ok(())
    }

    /// Analytic `[min, max]` rate that any generated entry can take.
    pub fn rate_bounds(&self, bandwidth_hz: f64) -> (f64, f64) {
        (
            bandwidth_hz * (1.0 + db_to_linear(self.sinr_min_db)).log2(),
            bandwidth_hz * (1.0 + db_to_linear(self.sinr_max_db)).log2(),
        )
    }
}

/// `N x KL` matrix of achievable rates in bit/s.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityMap {
    rates: Array2<f64>,
    grid: ChannelGrid,
}

impl CapacityMap {
    /// Wraps an explicit rate matrix (rows = vehicles, columns = global
    /// subchannels).
    pub fn from_rates(rates: Array2<f64>, vehicles: usize, grid: ChannelGrid) -> Result<Self, ChannelError> {
        let expected = (vehicles, grid.total_subchannels());
        if rates.dim() != expected {
            return Err(ChannelError::ShapeMismatch { expected, got: rates.dim() });
        }
        if let Some(((row, col), &value)) = rates.indexed_iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(ChannelError::InvalidRate { row, col, value });
        }
        Ok(Self { rates, grid })
    }

    /// Builds a map from nested rows, a convenience for tests and examples.
    pub fn from_rows(rows: &[Vec<f64>], grid: ChannelGrid) -> Result<Self, ChannelError> {
        let n = rows.len();
        let kl = grid.total_subchannels();
        if let Some(bad) = rows.iter().find(|r| r.len() != kl) {
            return Err(ChannelError::ShapeMismatch { expected: (n, kl), got: (n, bad.len()) });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let rates = Array2::from_shape_vec((n, kl), flat).expect("row lengths checked");
        Self::from_rates(rates, n, grid)
    }

    #[inline]
    pub fn rates(&self) -> &Array2<f64> {
        &self.rates
    }

    #[inline]
    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }

    #[inline]
    pub fn vehicle_count(&self) -> usize {
        self.rates.nrows()
    }

    #[inline]
    pub fn rate(&self, id: VehicleId, k: usize) -> f64 {
        self.rates[[id.index(), k]]
    }
}

/// Draws one independent SINR sample per (vehicle, subchannel) and maps it
/// through [`capacity_of`]. Samples are taken vehicle-major, so the map is a
/// pure function of the scenario size, the grid and `params`.
pub fn generate_capacities(
    s: &Scenario,
    g: &ChannelGrid,
    params: &ChannelModelParams,
) -> Result<CapacityMap, ChannelError> {
    params.validate()?;
    let n = s.vehicle_count();
    let kl = g.total_subchannels();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let dist = match params.distribution {
        SinrDistribution::UniformDb => Uniform::new_inclusive(params.sinr_min_db, params.sinr_max_db),
    };
    let mut rates = Array2::zeros((n, kl));
    for v in rates.iter_mut() {
        let db = dist.sample(&mut rng);
        *v = capacity_of(db_to_linear(db), g.bandwidth_hz())?;
    }
    CapacityMap::from_rates(rates, n, *g)
}
