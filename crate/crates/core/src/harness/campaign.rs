use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CampaignConfig, ConfigError, SolverKind};
use super::stats::{aggregate_stats, GroupStats};
use crate::channel::{generate_capacities, CapacityMap, ChannelModelParams};
use crate::constraints::{verify, ConflictReport, ConstraintSystem};
use crate::exact::{solve_exact, SolverOptions};
use crate::mikp::{run_mikp, MikpError};
use crate::solution::{SolveResult, SolveStatus};

/// Violations found by the verifier, counted per kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictCounts {
    pub type2: u64,
    pub type3: u64,
    pub type4: u64,
    /// Rates outside the QoS window. Expected for the heuristic, whose
    /// rates may fall below it.
    pub qos: u64,
}

impl ConflictCounts {
    fn of(report: &ConflictReport) -> Self {
        Self {
            type2: report.type2.len() as u64,
            type3: report.type3.len() as u64,
            type4: report.type4.len() as u64,
            qos: report.qos_violations.len() as u64,
        }
    }

    fn add(&mut self, other: &Self) {
        self.type2 += other.type2;
        self.type3 += other.type3;
        self.type4 += other.type4;
        self.qos += other.qos;
    }

    /// Type II, III and IV together.
    pub fn conflicts(&self) -> u64 {
        self.type2 + self.type3 + self.type4
    }
}

/// Wall-clock time of a solver call. Not serialized and ignored by
/// equality, so results stay a function of the config alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct Elapsed(pub f64);

impl PartialEq for Elapsed {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    /// `None` when the trial failed with an error.
    pub status: Option<SolveStatus>,
    pub objective_bps: f64,
    /// Per-vehicle rates of the carried assignment, zeros without one.
    pub rates_bps: Vec<f64>,
    /// Vehicles with a nonzero rate.
    pub served: usize,
    /// Vehicles the heuristic could not give any admissible subchannel.
    pub blocked: usize,
    pub nodes: u64,
    pub conflicts: ConflictCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub elapsed: Elapsed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub optimal: u64,
    pub infeasible: u64,
    pub timeout: u64,
    pub heuristic: u64,
    pub error: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOutcome {
    pub solver: SolverKind,
    /// Share of trials whose allocation enters the statistics: optimal
    /// for the exact solver, completed for the heuristic.
    pub feasibility_rate: f64,
    pub status_counts: StatusCounts,
    /// Summed over every trial that produced an assignment, timeouts
    /// included.
    pub conflicts: ConflictCounts,
    /// Ordered by target, highest first.
    pub groups: Vec<GroupStats>,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub trials: u64,
    pub base_seed: u64,
    pub vehicles: usize,
    pub solvers: Vec<SolverOutcome>,
}

impl CampaignResult {
    pub fn solver(&self, kind: SolverKind) -> Option<&SolverOutcome> {
        self.solvers.iter().find(|s| s.solver == kind)
    }
}

/// Whether a trial's rates enter the group statistics.
pub fn counts_toward_stats(status: Option<SolveStatus>) -> bool {
    matches!(status, Some(SolveStatus::Optimal | SolveStatus::Heuristic))
}

/// Runs every trial of the campaign on a pool of `cfg.workers` threads.
///
/// Trial `t` draws capacities and the heuristic's matching from seed
/// `base_seed + t`. Each solver output is checked by the verifier inside
/// the worker. Per-trial failures are recorded, not returned. Trials are
/// reduced in index order, so the result does not depend on the worker
/// count.
pub fn run_trials(cfg: &CampaignConfig) -> Result<CampaignResult, ConfigError> {
    cfg.validate()?;
    let cs = ConstraintSystem::new(&cfg.scenario, &cfg.grid);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| ConfigError::Invalid(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let runs: Vec<Vec<TrialRecord>> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, &cs, t)).collect());

    let mut targets: Vec<f64> = cfg.scenario.qos_bps().to_vec();
    targets.sort_by(|a, b| b.total_cmp(a));
    targets.dedup();

    let solvers = cfg
        .solvers
        .iter()
        .enumerate()
        .map(|(slot, &solver)| {
            let mut status_counts = StatusCounts::default();
            let mut conflicts = ConflictCounts::default();
            let mut samples = vec![Vec::new(); targets.len()];
            let mut records = Vec::with_capacity(runs.len());
            let mut successes = 0u64;
            for trial in &runs {
                let record = &trial[slot];
                match record.status {
                    Some(SolveStatus::Optimal) => status_counts.optimal += 1,
                    Some(SolveStatus::Infeasible) => status_counts.infeasible += 1,
                    Some(SolveStatus::Timeout) => status_counts.timeout += 1,
                    Some(SolveStatus::Heuristic) => status_counts.heuristic += 1,
                    None => status_counts.error += 1,
                }
                conflicts.add(&record.conflicts);
                if counts_toward_stats(record.status) {
                    successes += 1;
                    for (i, &rate) in record.rates_bps.iter().enumerate() {
                        if rate > 0.0 {
                            let q = cfg.scenario.qos_bps()[i];
                            let g = targets.iter().position(|&t| t == q).expect("every target is listed");
                            samples[g].push(rate);
                        }
                    }
                }
                records.push(record.clone());
            }
            let groups = targets
                .iter()
                .zip(&samples)
                .map(|(&q, list)| GroupStats {
                    qos_bps: q,
                    vehicles: cfg.scenario.qos_bps().iter().filter(|&&x| x == q).count(),
                    stats: aggregate_stats(list).ok(),
                })
                .collect();
            SolverOutcome {
                solver,
                feasibility_rate: successes as f64 / cfg.trials as f64,
                status_counts,
                conflicts,
                groups,
                records,
            }
        })
        .collect();

    Ok(CampaignResult { trials: cfg.trials, base_seed: cfg.base_seed, vehicles: cfg.scenario.vehicle_count(), solvers })
}

fn run_trial(cfg: &CampaignConfig, cs: &ConstraintSystem, t: u64) -> Vec<TrialRecord> {
    let seed = cfg.base_seed.wrapping_add(t);
    let params = ChannelModelParams { seed, ..cfg.channel };
    let capacities = generate_capacities(&cfg.scenario, &cfg.grid, &params);
    cfg.solvers
        .iter()
        .map(|&solver| {
            let blank = TrialRecord {
                trial: t,
                seed,
                status: None,
                objective_bps: 0.0,
                rates_bps: vec![0.0; cfg.scenario.vehicle_count()],
                served: 0,
                blocked: 0,
                nodes: 0,
                conflicts: ConflictCounts::default(),
                error: None,
                elapsed: Elapsed::default(),
            };
            let c = match &capacities {
                Ok(c) => c,
                Err(e) => {
                    return TrialRecord { error: Some(e.to_string()), ..blank };
                }
            };
            let start = Instant::now();
            let outcome = solve(cfg, cs, c, solver, seed);
            let elapsed = Elapsed(start.elapsed().as_secs_f64());
            match outcome.and_then(|r| check(cfg, cs, c, r)) {
                Ok((r, conflicts)) => TrialRecord {
                    status: Some(r.status),
                    objective_bps: r.objective_bps,
                    served: r.per_vehicle_rate_bps.iter().filter(|&&x| x > 0.0).count(),
                    rates_bps: r.per_vehicle_rate_bps,
                    blocked: r.diagnostics.blocked.len(),
                    nodes: r.diagnostics.nodes_explored,
                    conflicts,
                    elapsed,
                    ..blank
                },
                Err(e) => TrialRecord { error: Some(e), elapsed, ..blank },
            }
        })
        .collect()
}

fn solve(
    cfg: &CampaignConfig,
    cs: &ConstraintSystem,
    c: &CapacityMap,
    solver: SolverKind,
    seed: u64,
) -> Result<SolveResult, String> {
    let (s, g) = (&cfg.scenario, &cfg.grid);
    match solver {
        SolverKind::Exact => {
            let opt = SolverOptions { time_limit_s: cfg.time_limit_s, ..Default::default() };
            solve_exact(s, g, c, cs, &opt).map_err(|e| e.to_string())
        }
        SolverKind::Mikp => match run_mikp(s, g, c, cs, seed, cfg.resolution_bps) {
            Ok(r) => Ok(r),
            Err(MikpError::InsufficientSubframes { .. }) => {
                Ok(SolveResult::without_assignment(SolveStatus::Infeasible, s.vehicle_count(), Default::default()))
            }
            Err(e) => Err(e.to_string()),
        },
    }
}

fn check(
    cfg: &CampaignConfig,
    cs: &ConstraintSystem,
    c: &CapacityMap,
    r: SolveResult,
) -> Result<(SolveResult, ConflictCounts), String> {
    let counts = match &r.assignment {
        Some(a) => ConflictCounts::of(&verify(a, &cfg.scenario, &cfg.grid, c, cs).map_err(|e| e.to_string())?),
        None => ConflictCounts::default(),
    };
    Ok((r, counts))
}
