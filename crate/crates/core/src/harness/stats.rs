use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no samples to aggregate")]
    EmptySamples,
}

/// Summary of one sample list, in the samples' unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    /// Sample standard deviation (divisor `n - 1`), 0 for a single sample.
    pub std: f64,
    pub count: usize,
}

/// Rates of one QoS group for one solver, in bit/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub qos_bps: f64,
    /// Vehicles with this target.
    pub vehicles: usize,
    /// `None` when no trial contributed a sample.
    pub stats: Option<SampleStats>,
}

impl GroupStats {
    pub fn sample_count(&self) -> usize {
        self.stats.map_or(0, |s| s.count)
    }
}

/// Mean, extremes and sample standard deviation. Sums run in slice order,
/// so equal inputs give bit-identical outputs.
pub fn aggregate_stats(samples: &[f64]) -> Result<SampleStats, StatsError> {
    let (&first, rest) = samples.split_first().ok_or(StatsError::EmptySamples)?;
    let n = samples.len();
    let (mut min, mut max, mut sum) = (first, first, first);
    for &x in rest {
        min = min.min(x);
        max = max.max(x);
        sum += x;
    }
    // Clamp guards against the mean rounding just outside the range.
    let mean = (sum / n as f64).clamp(min, max);
    let std = if n > 1 {
        let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SampleStats { mean, max, min, std, count: n })
}
