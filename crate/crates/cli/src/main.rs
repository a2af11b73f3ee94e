use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use v2v_alloc::channel::{generate_capacities, ChannelModelParams};
use v2v_alloc::constraints::{verify, Assignment, ConstraintSystem};
use v2v_alloc::exact::{solve_exact, SolverOptions};
use v2v_alloc::harness::{emit_report, run_trials, CampaignConfig, CampaignResult, OutputFormat, SolverKind};
use v2v_alloc::mikp::run_mikp;

const CONFIG_ERROR: u8 = 1;
const CAMPAIGN_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(name = "v2v-alloc", version, about = "Sidelink subchannel allocation: exact solver, heuristic and campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign and write the per-group report.
    Run(Common),
    /// Solve the instance drawn from one seed and print the results as JSON.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Write the assignment of the first enabled solver as CSV.
        #[arg(long, value_name = "PATH")]
        save_assignment: Option<PathBuf>,
    },
    /// Check an assignment CSV against the instance drawn from one seed.
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        assignment: PathBuf,
        /// Only Type II-IV conflicts make the audit fail.
        #[arg(long)]
        ignore_qos: bool,
    },
    /// Print the pair lists and selector matrices of the four-vehicle example.
    Example,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Exact,
    Mikp,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Campaign config (TOML). Defaults to the shipped reference layout.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    trials: Option<u64>,
    /// Base seed; `solve` and `audit` use it as the instance seed.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    /// QoS window half-width.
    #[arg(long, value_name = "MBPS")]
    epsilon: Option<f64>,
    /// Exact solver budget per trial, 0 for none.
    #[arg(long, value_name = "SECS")]
    time_limit: Option<f64>,
    /// Knapsack bucket width.
    #[arg(long, value_name = "KBPS")]
    resolution: Option<f64>,
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads, 0 for one per core.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<CampaignConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => CampaignConfig::load(path).map_err(|e| format!("{}: {e}", path.display()))?,
            None => CampaignConfig::reference(),
        };
        if let Some(n) = self.trials {
            cfg.trials = n;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        match self.solver {
            Some(SolverArg::Exact) => cfg.set_solvers(&[SolverKind::Exact]),
            Some(SolverArg::Mikp) => cfg.set_solvers(&[SolverKind::Mikp]),
            Some(SolverArg::Both) => cfg.set_solvers(&[SolverKind::Exact, SolverKind::Mikp]),
            None => {}
        }
        if let Some(eps) = self.epsilon {
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(format!("--epsilon must be finite and >= 0 (got {eps})"));
            }
            cfg.set_epsilon_mbps(eps).map_err(|e| e.to_string())?;
        }
        if let Some(t) = self.time_limit {
            cfg.time_limit_s = t;
        }
        if let Some(r) = self.resolution {
            cfg.resolution_bps = r * 1e3;
        }
        if let Some(path) = &self.output {
            cfg.output.path = Some(path.clone());
        }
        if let Some(f) = self.format {
            cfg.output.format = match f {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
            };
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(CONFIG_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(common) => run(&common),
        Command::Solve { common, save_assignment } => solve(&common, save_assignment),
        Command::Audit { common, assignment, ignore_qos } => audit(&common, assignment, ignore_qos),
        Command::Example => example(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(CONFIG_ERROR)
        }
        Err(Failure::Campaign(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(CAMPAIGN_FAILURE)
        }
    }
}

enum Failure {
    Config(String),
    Campaign(String),
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Campaign(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(common: &Common) -> Result<(), Failure> {
    let cfg = common.config().map_err(Failure::Config)?;
    let result = run_trials(&cfg).map_err(|e| Failure::Config(e.to_string()))?;
    let mut out = open_output(cfg.output.path.as_ref())?;
    emit_report(&result, cfg.output.format, &mut out).map_err(|e| Failure::Campaign(e.to_string()))?;
    out.flush().map_err(|e| Failure::Campaign(e.to_string()))?;
    summarize(&result)
}

/// Prints one status line per solver to stderr and fails on any conflict
/// or per-trial error.
fn summarize(result: &CampaignResult) -> Result<(), Failure> {
    let mut problems = Vec::new();
    for s in &result.solvers {
        let c = s.status_counts;
        eprintln!(
            "{}: {} trials, feasible {:.1}% (optimal {}, heuristic {}, infeasible {}, timeout {}, error {}), conflicts II/III/IV {}/{}/{}",
            s.solver,
            result.trials,
            100.0 * s.feasibility_rate,
            c.optimal,
            c.heuristic,
            c.infeasible,
            c.timeout,
            c.error,
            s.conflicts.type2,
            s.conflicts.type3,
            s.conflicts.type4,
        );
        if s.conflicts.conflicts() > 0 {
            problems.push(format!("{} produced {} conflicts", s.solver, s.conflicts.conflicts()));
        }
        if c.error > 0 {
            problems.push(format!("{} failed in {} trials", s.solver, c.error));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Campaign(problems.join("; ")))
    }
}

fn solve(common: &Common, save_assignment: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = common.config().map_err(Failure::Config)?;
    let (s, g) = (&cfg.scenario, &cfg.grid);
    let params = ChannelModelParams { seed: cfg.base_seed, ..cfg.channel };
    let c = generate_capacities(s, g, &params).map_err(|e| Failure::Config(e.to_string()))?;
    let cs = ConstraintSystem::new(s, g);

    let mut results = serde_json::Map::new();
    let mut first = None;
    for &solver in &cfg.solvers {
        let r = match solver {
            SolverKind::Exact => {
                let opt = SolverOptions { time_limit_s: cfg.time_limit_s, ..Default::default() };
                solve_exact(s, g, &c, &cs, &opt).map_err(|e| e.to_string())
            }
            SolverKind::Mikp => run_mikp(s, g, &c, &cs, cfg.base_seed, cfg.resolution_bps).map_err(|e| e.to_string()),
        };
        let r = r.map_err(|e| Failure::Campaign(format!("{solver}: {e}")))?;
        if first.is_none() {
            first = Some(r.assignment.clone());
        }
        results.insert(solver.to_string(), serde_json::to_value(&r).expect("results serialize"));
    }

    let mut out = open_output(cfg.output.path.as_ref())?;
    serde_json::to_writer_pretty(&mut out, &results).map_err(|e| Failure::Campaign(e.to_string()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| Failure::Campaign(e.to_string()))?;

    if let Some(path) = save_assignment {
        let a = first.flatten().ok_or_else(|| Failure::Campaign("no assignment to save".into()))?;
        let file = File::create(&path).map_err(|e| Failure::Campaign(format!("{}: {e}", path.display())))?;
        a.write_csv(file).map_err(|e| Failure::Campaign(e.to_string()))?;
    }
    Ok(())
}

fn audit(common: &Common, path: PathBuf, ignore_qos: bool) -> Result<(), Failure> {
    let cfg = common.config().map_err(Failure::Config)?;
    let (s, g) = (&cfg.scenario, &cfg.grid);
    let params = ChannelModelParams { seed: cfg.base_seed, ..cfg.channel };
    let c = generate_capacities(s, g, &params).map_err(|e| Failure::Config(e.to_string()))?;
    let cs = ConstraintSystem::new(s, g);
    let file = File::open(&path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let a = Assignment::read_csv(file).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let report = verify(&a, s, g, &c, &cs).map_err(|e| Failure::Config(e.to_string()))?;

    let mut out = open_output(cfg.output.path.as_ref())?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::Campaign(e.to_string()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| Failure::Campaign(e.to_string()))?;

    let clean = if ignore_qos { report.is_conflict_free() } else { report.is_empty() };
    if clean {
        Ok(())
    } else {
        Err(Failure::Campaign(format!(
            "{} QoS violations, Type II/III/IV conflicts {}/{}/{}",
            report.qos_violations.len(),
            report.type2.len(),
            report.type3.len(),
            report.type4.len()
        )))
    }
}

fn example() -> Result<(), Failure> {
    let (s, g) = v2v_alloc::example::worked_example();
    let cs = ConstraintSystem::new(&s, &g);
    let pair = |p: &v2v_alloc::scenario::VehiclePair| format!("(v{}, v{})", p.first.0, p.second.0);
    let mut out = io::stdout().lock();
    let text = format!(
        "clusters: {}\nL = {}, K = {}\n\nintra-cluster pairs: {}\none-hop pairs: {}\n\nG+ =\n{}\nG- =\n{}\nH+ =\n{}\nH- =\n{}\n[Q-]^T Q+ =\n{}\n",
        s.clusters()
            .iter()
            .map(|c| format!("{{{}}}", c.iter().map(|v| format!("v{}", v.0)).collect::<Vec<_>>().join(", ")))
            .collect::<Vec<_>>()
            .join(" "),
        g.subframes(),
        g.subchannels_per_subframe(),
        cs.intra_pairs.iter().map(pair).collect::<Vec<_>>().join(" "),
        cs.hop_pairs.iter().map(pair).collect::<Vec<_>>().join(" "),
        cs.g_plus,
        cs.g_minus,
        cs.h_plus,
        cs.h_minus,
        cs.q_product(),
    );
    out.write_all(text.as_bytes()).map_err(|e| Failure::Campaign(e.to_string()))
}
