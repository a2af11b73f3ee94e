//! Seeded Monte Carlo campaigns over both solvers.
//!
//! A campaign draws a fresh capacity map per trial, runs each enabled
//! solver on it, checks the output with the independent verifier and
//! collects per-vehicle rates by QoS target. Exact-solver trials that end
//! infeasible or on a time limit are counted but leave the rate
//! statistics alone; only vehicles with a nonzero rate contribute samples.
//!
//! ```
//! use v2v_alloc::harness::{emit_report, run_trials, CampaignConfig, OutputFormat};
//!
//! let cfg = CampaignConfig::from_toml_str(
//!     r#"
//! trials = 4
//! solvers = ["exact", "mikp"]
//! epsilon_mbps = 2.0
//!
//! [grid]
//! subframes = 3
//! subchannels = 2
//!
//! [scenario]
//! vehicles = 4
//! clusters = [[1, 2, 3], [1, 2, 4]]
//! qos_mbps = [6, 6, 3, 3]
//! "#,
//! )
//! .unwrap();
//! let result = run_trials(&cfg).unwrap();
//! assert_eq!(result.solvers.len(), 2);
//! assert_eq!(result.solvers[0].records.len(), 4);
//!
//! let mut csv = Vec::new();
//! emit_report(&result, OutputFormat::Csv, &mut csv).unwrap();
//! assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 2 * 2);
//! ```

mod campaign;
mod config;
mod report;
mod stats;

pub use campaign::{
    counts_toward_stats, run_trials, CampaignResult, ConflictCounts, Elapsed, SolverOutcome, StatusCounts,
    TrialRecord,
};
pub use config::{
    CampaignConfig, ConfigError, OutputFormat, OutputSpec, SolverKind, DEFAULT_TIME_LIMIT_S, REFERENCE_CONFIG,
};
pub use report::{emit_report, render_report, ReportError, CSV_HEADER};
pub use stats::{aggregate_stats, GroupStats, SampleStats, StatsError};
