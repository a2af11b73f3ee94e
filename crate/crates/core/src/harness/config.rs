//! Campaign configuration and its TOML file format.
//!
//! ```toml
//! trials = 1000
//! base_seed = 0
//! solvers = ["exact", "mikp"]
//! epsilon_mbps = 1.6
//! time_limit_s = 60.0      # exact solver, 0 for none
//! resolution_kbps = 10.0   # knapsack bucket width
//! workers = 0              # 0 picks one per core
//!
//! [grid]
//! subframes = 16
//! subchannels = 3
//! bandwidth_hz = 1.26e6    # optional
//!
//! [channel]                # optional, defaults shown
//! sinr_min_db = 0.0
//! sinr_max_db = 20.0
//!
//! [scenario]
//! vehicles = 40
//! clusters = [[1, 2, 3], [3, 4]]
//! qos_mbps = [12.0, 9.0, 6.0, 3.0]   # one entry per vehicle
//!
//! [output]                 # optional
//! path = "report.csv"
//! format = "csv"           # or "json"
//! ```
//!
//! Unknown keys are rejected. Errors carry the 1-based line of the
//! offending key or table.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

use crate::channel::ChannelModelParams;
use crate::mikp::DEFAULT_RESOLUTION_BPS;
use crate::scenario::{ChannelGrid, RawScenario, Scenario, DEFAULT_BANDWIDTH_HZ};

/// The reference highway layout: 40 vehicles in four clusters, 1000 trials.
pub const REFERENCE_CONFIG: &str = include_str!("../../../../configs/reference.toml");

pub const DEFAULT_TIME_LIMIT_S: f64 = 60.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    At { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Mikp,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Exact => "exact",
            SolverKind::Mikp => "mikp",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(SolverKind::Exact),
            "mikp" => Ok(SolverKind::Mikp),
            other => Err(format!("unknown solver {other:?} (expected exact or mikp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

/// A validated campaign description.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    /// Carries the QoS targets and the window half-width.
    pub scenario: Scenario,
    pub grid: ChannelGrid,
    /// The seed field is ignored; trial `t` uses `base_seed + t`.
    pub channel: ChannelModelParams,
    pub trials: u64,
    pub base_seed: u64,
    /// Sorted and deduplicated.
    pub solvers: Vec<SolverKind>,
    pub time_limit_s: f64,
    pub resolution_bps: f64,
    /// Worker threads, 0 for one per core. Never affects results.
    pub workers: usize,
    pub output: OutputSpec,
}

impl CampaignConfig {
    pub fn reference() -> Self {
        Self::from_toml_str(REFERENCE_CONFIG).expect("shipped config is valid")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::At {
            line: e.span().map_or(1, |span| line_of(text, span.start)),
            message: e.message().to_string(),
        })?;
        raw.validate(text)
    }

    /// Checks the invariants for configs assembled in code or altered
    /// after loading.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Invalid(m));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return fail("at least one solver must be enabled".into());
        }
        if !(self.time_limit_s.is_finite() && self.time_limit_s >= 0.0) {
            return fail(format!("time limit must be finite and non-negative (got {})", self.time_limit_s));
        }
        if !(self.resolution_bps.is_finite() && self.resolution_bps > 0.0) {
            return fail(format!("resolution must be positive (got {} bit/s)", self.resolution_bps));
        }
        self.channel.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.solvers.contains(&SolverKind::Exact) && self.grid.subchannels_per_subframe() > 8 {
            return fail("the exact solver handles at most 8 subchannels per subframe".into());
        }
        Ok(())
    }

    pub fn set_solvers(&mut self, solvers: &[SolverKind]) {
        let mut list = solvers.to_vec();
        list.sort_unstable();
        list.dedup();
        self.solvers = list;
    }

    pub fn set_epsilon_mbps(&mut self, epsilon_mbps: f64) -> Result<(), ConfigError> {
        self.scenario =
            self.scenario.with_epsilon(epsilon_mbps * 1e6).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    trials: Spanned<u64>,
    #[serde(default)]
    base_seed: u64,
    solvers: Spanned<Vec<SolverKind>>,
    epsilon_mbps: Spanned<f64>,
    time_limit_s: Option<Spanned<f64>>,
    resolution_kbps: Option<Spanned<f64>>,
    #[serde(default)]
    workers: usize,
    grid: Spanned<RawGrid>,
    channel: Option<Spanned<RawChannel>>,
    scenario: Spanned<RawScenarioTable>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    subframes: usize,
    subchannels: usize,
    bandwidth_hz: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    sinr_min_db: f64,
    sinr_max_db: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenarioTable {
    vehicles: usize,
    clusters: Vec<Vec<u32>>,
    qos_mbps: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    #[serde(default)]
    format: OutputFormat,
}

impl RawConfig {
    fn validate(self, text: &str) -> Result<CampaignConfig, ConfigError> {
        let at = |span: Range<usize>, message: String| ConfigError::At { line: line_of(text, span.start), message };

        if *self.trials.get_ref() == 0 {
            return Err(at(self.trials.span(), "trials must be at least 1".into()));
        }
        if self.solvers.get_ref().is_empty() {
            return Err(at(self.solvers.span(), "solvers must name at least one of \"exact\", \"mikp\"".into()));
        }
        let epsilon = *self.epsilon_mbps.get_ref();
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(at(self.epsilon_mbps.span(), format!("epsilon_mbps must be finite and >= 0 (got {epsilon})")));
        }
        let time_limit_s = match &self.time_limit_s {
            Some(t) if !(t.get_ref().is_finite() && *t.get_ref() >= 0.0) => {
                return Err(at(t.span(), format!("time_limit_s must be finite and >= 0 (got {})", t.get_ref())));
            }
            Some(t) => *t.get_ref(),
            None => DEFAULT_TIME_LIMIT_S,
        };
        let resolution_bps = match &self.resolution_kbps {
            Some(r) if !(r.get_ref().is_finite() && *r.get_ref() > 0.0) => {
                return Err(at(r.span(), format!("resolution_kbps must be positive (got {})", r.get_ref())));
            }
            Some(r) => *r.get_ref() * 1e3,
            None => DEFAULT_RESOLUTION_BPS,
        };

        let grid_span = self.grid.span();
        let raw_grid = self.grid.into_inner();
        let grid = ChannelGrid::new(
            raw_grid.subframes,
            raw_grid.subchannels,
            raw_grid.bandwidth_hz.unwrap_or(DEFAULT_BANDWIDTH_HZ),
        )
        .map_err(|e| at(grid_span.clone(), e.to_string()))?;

        let channel = match self.channel {
            Some(spanned) => {
                let span = spanned.span();
                let raw = spanned.into_inner();
                let params = ChannelModelParams {
                    sinr_min_db: raw.sinr_min_db,
                    sinr_max_db: raw.sinr_max_db,
                    ..Default::default()
                };
                params.validate().map_err(|e| at(span, e.to_string()))?;
                params
            }
            None => ChannelModelParams::default(),
        };

        let scenario_span = self.scenario.span();
        let raw = self.scenario.into_inner();
        let scenario = Scenario::new(RawScenario {
            vehicles: raw.vehicles,
            clusters: raw.clusters,
            qos_bps: raw.qos_mbps.iter().map(|q| q * 1e6).collect(),
            epsilon_bps: epsilon * 1e6,
        })
        .map_err(|e| at(scenario_span, e.to_string()))?;

        let mut cfg = CampaignConfig {
            scenario,
            grid,
            channel,
            trials: self.trials.into_inner(),
            base_seed: self.base_seed,
            solvers: Vec::new(),
            time_limit_s,
            resolution_bps,
            workers: self.workers,
            output: self
                .output
                .map(|o| OutputSpec { path: o.path, format: o.format })
                .unwrap_or(OutputSpec { path: None, format: OutputFormat::Csv }),
        };
        let solvers_span = self.solvers.span();
        cfg.set_solvers(self.solvers.get_ref());
        if cfg.solvers.contains(&SolverKind::Exact) && cfg.grid.subchannels_per_subframe() > 8 {
            return Err(at(grid_span, "the exact solver handles at most 8 subchannels per subframe".into()));
        }
        cfg.validate().map_err(|e| at(solvers_span, e.to_string()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"trials = 3
base_seed = 7
solvers = ["mikp", "exact", "mikp"]
epsilon_mbps = 1.0

[grid]
subframes = 4
subchannels = 2

[scenario]
vehicles = 3
clusters = [[1, 2], [2, 3]]
qos_mbps = [3.0, 3.0, 6.0]
"#;

    fn err_line(text: &str) -> usize {
        match CampaignConfig::from_toml_str(text) {
            Err(ConfigError::At { line, .. }) => line,
            other => panic!("expected a located error, got {other:?}"),
        }
    }

    #[test]
    fn small_config_loads_with_defaults() {
        let cfg = CampaignConfig::from_toml_str(SMALL).unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.base_seed, 7);
        assert_eq!(cfg.solvers, vec![SolverKind::Exact, SolverKind::Mikp]);
        assert_eq!(cfg.time_limit_s, DEFAULT_TIME_LIMIT_S);
        assert_eq!(cfg.resolution_bps, DEFAULT_RESOLUTION_BPS);
        assert_eq!(cfg.scenario.epsilon_bps(), 1e6);
        assert_eq!(cfg.scenario.qos_bps(), &[3e6, 3e6, 6e6]);
        assert_eq!(cfg.grid.bandwidth_hz(), DEFAULT_BANDWIDTH_HZ);
        assert_eq!(cfg.output, OutputSpec { path: None, format: OutputFormat::Csv });
    }

    #[test]
    fn reference_config_matches_the_highway_layout() {
        let cfg = CampaignConfig::reference();
        assert_eq!(cfg.trials, 1000);
        assert_eq!((cfg.grid.subframes(), cfg.grid.subchannels_per_subframe()), (16, 3));
        assert_eq!(cfg.scenario.vehicle_count(), 40);
        assert_eq!(cfg.scenario.epsilon_bps(), 1.6e6);
        let sizes: Vec<usize> = cfg.scenario.clusters().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![16, 16, 16, 8]);
        for q in [12e6, 9e6, 6e6, 3e6] {
            assert_eq!(cfg.scenario.qos_bps().iter().filter(|&&x| x == q).count(), 10);
        }
        let shared: Vec<_> = cfg.scenario.clusters()[0]
            .iter()
            .filter(|v| cfg.scenario.contains(1, **v) && cfg.scenario.contains(2, **v))
            .collect();
        assert_eq!(shared.len(), 8);
        assert!(cfg.scenario.clusters()[3].iter().all(|v| cfg.scenario.clusters_of(*v) == vec![3]));
    }

    #[test]
    fn zero_trials_points_at_its_line() {
        assert_eq!(err_line(&SMALL.replace("trials = 3", "trials = 0")), 1);
    }

    #[test]
    fn empty_solver_list_points_at_its_line() {
        assert_eq!(err_line(&SMALL.replace(r#"["mikp", "exact", "mikp"]"#, "[]")), 3);
    }

    #[test]
    fn unknown_solver_is_a_parse_error_on_its_line() {
        assert_eq!(err_line(&SMALL.replace("\"exact\"", "\"greedy\"")), 3);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert_eq!(err_line(&SMALL.replace("subchannels = 2", "subchannels = 2\ncolour = 1")), 9);
    }

    #[test]
    fn scenario_errors_point_into_the_scenario_table() {
        let line = err_line(&SMALL.replace("[[1, 2], [2, 3]]", "[[1, 2], [2, 9]]"));
        assert!((10..=13).contains(&line), "line {line}");
    }

    #[test]
    fn qos_length_mismatch_is_rejected() {
        assert!(CampaignConfig::from_toml_str(&SMALL.replace("[3.0, 3.0, 6.0]", "[3.0, 3.0]")).is_err());
    }

    #[test]
    fn grid_beyond_the_spectrum_is_rejected() {
        let line = err_line(&SMALL.replace("subchannels = 2", "subchannels = 9"));
        assert!((6..=8).contains(&line), "line {line}");
    }

    #[test]
    fn negative_epsilon_is_rejected() {
        assert_eq!(err_line(&SMALL.replace("epsilon_mbps = 1.0", "epsilon_mbps = -1.0")), 4);
    }

    #[test]
    fn epsilon_override_keeps_targets() {
        let mut cfg = CampaignConfig::from_toml_str(SMALL).unwrap();
        cfg.set_epsilon_mbps(0.25).unwrap();
        assert_eq!(cfg.scenario.epsilon_bps(), 0.25e6);
        assert_eq!(cfg.scenario.qos_bps(), &[3e6, 3e6, 6e6]);
    }

    #[test]
    fn programmatic_validation_catches_zero_trials() {
        let mut cfg = CampaignConfig::from_toml_str(SMALL).unwrap();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }
}
