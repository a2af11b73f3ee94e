//! Acceptance suite. One test per criterion; each prints a single
//! summary line (visible with `--nocapture`) and fails on the first
//! violated bound. The full-scale tests share one 1000-trial campaign on
//! the shipped reference config.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ndarray::{linalg::kron, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use v2v_alloc::channel::{generate_capacities, CapacityMap, ChannelModelParams};
use v2v_alloc::constraints::{verify, Assignment, ConstraintSystem};
use v2v_alloc::exact::{brute_force_solve, solve_exact, SolverOptions, BRUTE_FORCE_MAX_CELLS};
use v2v_alloc::harness::{render_report, run_trials, CampaignConfig, CampaignResult, OutputFormat, SolverKind};
use v2v_alloc::mikp::{knapsack_brute, knapsack_select, run_mikp, KnapsackInstance, KnapsackItem};
use v2v_alloc::scenario::{ChannelGrid, RawScenario, Scenario};
use v2v_alloc::solution::SolveStatus;

const GOLDEN_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_INSTANCES: usize = 240;
const ORACLE_OBJECTIVE_REL_TOL: f64 = 1e-6;
const ORACLE_BUDGET: Duration = Duration::from_secs(120);
const KNAPSACK_INSTANCES: usize = 1000;
const KNAPSACK_MAX_ITEMS: usize = 10;
const KNAPSACK_RESOLUTION_BPS: f64 = 10e3;
const KNAPSACK_BUDGET: Duration = Duration::from_secs(10);
const FULL_SCALE_TRIALS: u64 = 1000;
const EXACT_TIME_LIMIT_S: f64 = 60.0;
const MIKP_TRIAL_BUDGET_S: f64 = 0.1;
const QOS_REL_TOL: f64 = 1e-9;
const DETERMINISM_TRIALS: u64 = 30;
const DETERMINISM_WORKERS: [usize; 3] = [1, 2, 4];
const VERIFIER_ASSIGNMENTS: usize = 10_000;

fn reference() -> CampaignConfig {
    let cfg = CampaignConfig::reference();
    assert_eq!(cfg.trials, FULL_SCALE_TRIALS);
    assert_eq!(cfg.time_limit_s, EXACT_TIME_LIMIT_S);
    assert_eq!(cfg.solvers, vec![SolverKind::Exact, SolverKind::Mikp]);
    cfg
}

fn full_scale() -> &'static CampaignResult {
    static RESULT: OnceLock<CampaignResult> = OnceLock::new();
    RESULT.get_or_init(|| run_trials(&reference()).expect("reference config runs"))
}

#[test]
fn golden_example_matrices() {
    let start = Instant::now();
    let (s, g) = v2v_alloc::example::worked_example();
    let cs = ConstraintSystem::new(&s, &g);
    let g_minus = Array2::from_shape_vec((5, 4), vec![1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0]).unwrap();
    let g_plus = Array2::from_shape_vec((5, 4), vec![0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1]).unwrap();
    assert_eq!(cs.g_minus, g_minus);
    assert_eq!(cs.g_plus, g_plus);
    assert_eq!(cs.h_minus, Array2::from_shape_vec((1, 4), vec![0, 0, 1, 0]).unwrap());
    assert_eq!(cs.h_plus, Array2::from_shape_vec((1, 4), vec![0, 0, 0, 1]).unwrap());
    assert_eq!(cs.q_product(), Array2::from_shape_vec((3, 3), vec![0, 0, 0, 1, 0, 0, 1, 1, 0]).unwrap());
    let elapsed = start.elapsed();
    println!("golden matrices: exact match in {elapsed:?}");
    assert!(elapsed < GOLDEN_BUDGET, "{elapsed:?}");
}

fn micro_instance(rng: &mut ChaCha8Rng, epsilon_bps: f64) -> (Scenario, ChannelGrid, CapacityMap) {
    let (n, k, l) = loop {
        let t = (rng.gen_range(1..=4usize), rng.gen_range(1..=3usize), rng.gen_range(1..=4usize));
        if t.0 * t.1 * t.2 <= BRUTE_FORCE_MAX_CELLS {
            break t;
        }
    };
    let mut clusters: Vec<Vec<u32>> = (0..rng.gen_range(1..=3))
        .map(|_| (1..=n as u32).filter(|_| rng.gen_bool(0.6)).collect::<Vec<_>>())
        .filter(|c| !c.is_empty())
        .collect();
    for v in 1..=n as u32 {
        if !clusters.iter().any(|c| c.contains(&v)) {
            clusters.push(vec![v]);
        }
    }
    let g = ChannelGrid::with_default_bandwidth(l, k).unwrap();
    let rows: Vec<Vec<f64>> =
        (0..n).map(|_| (0..k * l).map(|_| rng.gen_range(0..=16) as f64 * 0.5e6).collect()).collect();
    // Half of the targets are sums of a random single-subframe subset, so
    // that a zero-width window can still be met.
    let qos = rows
        .iter()
        .map(|row| {
            if rng.gen_bool(0.5) {
                let f = rng.gen_range(0..l);
                let sum: f64 = (0..k).filter(|_| rng.gen_bool(0.5)).map(|b| row[f * k + b]).sum();
                if sum > 0.0 {
                    return sum;
                }
            }
            rng.gen_range(1..=16) as f64 * 0.5e6
        })
        .collect();
    let s = Scenario::new(RawScenario { vehicles: n, clusters, qos_bps: qos, epsilon_bps }).unwrap();
    let c = CapacityMap::from_rows(&rows, g).unwrap();
    (s, g, c)
}

#[test]
fn exact_solver_matches_brute_force_on_micro_instances() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let (mut optimal, mut infeasible) = (0, 0);
    for i in 0..ORACLE_INSTANCES {
        let eps = [0.0, 0.5e6, 1e9][i % 3];
        let (s, g, c) = micro_instance(&mut rng, eps);
        let cs = ConstraintSystem::new(&s, &g);
        let exact = solve_exact(&s, &g, &c, &cs, &SolverOptions::default()).unwrap();
        let brute = brute_force_solve(&s, &g, &c, &cs).unwrap();
        assert_eq!(exact.status, brute.status, "instance {i}: {s:?}");
        let tol = ORACLE_OBJECTIVE_REL_TOL * brute.objective_bps.abs().max(1.0);
        assert!((exact.objective_bps - brute.objective_bps).abs() <= tol, "instance {i}");
        match exact.status {
            SolveStatus::Optimal => optimal += 1,
            SolveStatus::Infeasible => infeasible += 1,
            other => panic!("instance {i}: unexpected {other:?}"),
        }
    }
    let elapsed = start.elapsed();
    println!("oracle equivalence: {ORACLE_INSTANCES} instances ({optimal} optimal, {infeasible} infeasible) in {elapsed:?}");
    assert!(optimal > ORACLE_INSTANCES / 4 && infeasible > ORACLE_INSTANCES / 10, "degenerate sample");
    assert!(elapsed < ORACLE_BUDGET, "{elapsed:?}");
}

#[test]
fn knapsack_within_resolution_of_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a9);
    let mut worst_gap: f64 = 0.0;
    for i in 0..KNAPSACK_INSTANCES {
        let count = rng.gen_range(1..=KNAPSACK_MAX_ITEMS);
        let items: Vec<KnapsackItem> =
            (0..count).map(|k| KnapsackItem { subchannel: k, rate_bps: rng.gen_range(0.0..9e6) }).collect();
        let forbidden: BTreeSet<usize> = (0..count).filter(|_| rng.gen_bool(0.15)).collect();
        let inst = KnapsackInstance { items, budget_bps: rng.gen_range(0.5e6..20e6), forbidden };
        let best = knapsack_brute(&inst).unwrap();
        let sel = knapsack_select(&inst, KNAPSACK_RESOLUTION_BPS);
        assert!(sel.total_bps <= inst.budget_bps, "instance {i}: over budget");
        assert!(sel.subchannels.iter().all(|k| !inst.forbidden.contains(k)), "instance {i}: forbidden item");
        let gap = best.total_bps - sel.total_bps;
        assert!(gap <= KNAPSACK_RESOLUTION_BPS * count as f64, "instance {i}: gap {gap}");
        worst_gap = worst_gap.max(gap);
    }
    let elapsed = start.elapsed();
    println!("knapsack: {KNAPSACK_INSTANCES} instances, worst gap {worst_gap:.1} bit/s, {elapsed:?}");
    assert!(elapsed < KNAPSACK_BUDGET, "{elapsed:?}");
}

#[test]
fn full_scale_campaign_is_conflict_free() {
    let r = full_scale();
    for s in &r.solvers {
        let c = s.conflicts;
        assert_eq!((c.type2, c.type3, c.type4), (0, 0, 0), "{}", s.solver);
        assert_eq!(s.status_counts.error, 0, "{}", s.solver);
        assert_eq!(s.records.len() as u64, FULL_SCALE_TRIALS);
    }
    let exact = r.solver(SolverKind::Exact).unwrap();
    let mikp = r.solver(SolverKind::Mikp).unwrap();
    // Timeouts carrying an incumbent were verified like any other trial.
    let checked = exact.records.iter().filter(|rec| rec.status == Some(SolveStatus::Timeout)).count();
    let slowest = mikp.records.iter().map(|rec| rec.elapsed.0).fold(0.0, f64::max);
    let slowest_exact = exact.records.iter().map(|rec| rec.elapsed.0).fold(0.0, f64::max);
    println!(
        "conflict-freeness: 0 conflicts over {FULL_SCALE_TRIALS} trials x 2 solvers; exact timeouts {checked}, slowest exact {slowest_exact:.3} s, slowest mikp {:.2} ms",
        slowest * 1e3
    );
    assert!(slowest < MIKP_TRIAL_BUDGET_S, "mikp trial took {slowest} s");
    assert!(slowest_exact < EXACT_TIME_LIMIT_S + 1.0);
}

#[test]
fn qos_windows_hold() {
    let r = full_scale();
    let cfg = reference();
    let q = cfg.scenario.qos_bps();
    let eps = cfg.scenario.epsilon_bps();
    let exact = r.solver(SolverKind::Exact).unwrap();
    let mut checked = 0;
    for rec in exact.records.iter().filter(|rec| rec.status == Some(SolveStatus::Optimal)) {
        for (i, &rate) in rec.rates_bps.iter().enumerate() {
            let tol = QOS_REL_TOL * q[i];
            assert!(rate >= q[i] - eps - tol && rate <= q[i] + eps + tol, "trial {} vehicle {}: {rate}", rec.trial, i + 1);
        }
        checked += 1;
    }
    let mikp = r.solver(SolverKind::Mikp).unwrap();
    for rec in &mikp.records {
        for (i, &rate) in rec.rates_bps.iter().enumerate() {
            assert!(rate <= q[i] + QOS_REL_TOL * q[i], "trial {} vehicle {}: {rate}", rec.trial, i + 1);
        }
    }
    println!("qos windows: {checked} optimal exact trials inside [q-eps, q+eps], {} mikp trials at or below q", mikp.records.len());
    assert!(checked > 0);
}

#[test]
fn mikp_serves_every_vehicle_it_can() {
    let r = full_scale();
    let cfg = reference();
    let (s, g) = (&cfg.scenario, &cfg.grid);
    assert!(s.clusters().iter().all(|c| c.len() <= g.subframes()));
    let cs = ConstraintSystem::new(s, g);
    let mikp = r.solver(SolverKind::Mikp).unwrap();
    assert_eq!(mikp.status_counts.heuristic, FULL_SCALE_TRIALS);
    let mut hop_partners = vec![Vec::new(); s.vehicle_count()];
    for p in &cs.hop_pairs {
        hop_partners[p.first.index()].push(p.second);
        hop_partners[p.second.index()].push(p.first);
    }

    let mut blocked = 0;
    for rec in &mikp.records {
        let c = generate_capacities(s, g, &ChannelModelParams { seed: rec.seed, ..cfg.channel }).unwrap();
        let rerun = run_mikp(s, g, &c, &cs, rec.seed, cfg.resolution_bps).unwrap();
        assert_eq!(rerun.per_vehicle_rate_bps, rec.rates_bps);
        let matched = rerun.diagnostics.matched_subframes.as_ref().unwrap();
        let a = rerun.assignment.as_ref().unwrap();
        for v in s.vehicles() {
            let l = matched[v.index()].unwrap_or_else(|| panic!("trial {}: {v:?} unmatched", rec.trial));
            if rec.rates_bps[v.index()] > 0.0 {
                continue;
            }
            // An unserved vehicle must have had no subchannel in its
            // subframe that fits its budget and is free of hop partners.
            blocked += 1;
            for k in g.subchannels_of(l) {
                let fits = c.rate(v, k) <= s.qos(v);
                let taken = hop_partners[v.index()].iter().any(|p| a.get(*p, k));
                assert!(!fits || taken, "trial {}: {v:?} left without service on subchannel {k}", rec.trial);
            }
        }
        assert_eq!(rec.served + rec.blocked, s.vehicle_count());
    }
    let total = FULL_SCALE_TRIALS as usize * s.vehicle_count();
    println!(
        "service: all {FULL_SCALE_TRIALS} mikp trials matched every vehicle; {blocked}/{total} vehicle-trials had no admissible subchannel"
    );
}

#[test]
fn heuristic_spread_dominates_exact() {
    let r = full_scale();
    let cfg = reference();
    let eps = cfg.scenario.epsilon_bps();
    let exact = r.solver(SolverKind::Exact).unwrap();
    let mikp = r.solver(SolverKind::Mikp).unwrap();
    let mut line = String::from("spread (std Mbps, mikp vs exact):");
    for (e, m) in exact.groups.iter().zip(&mikp.groups) {
        assert_eq!(e.qos_bps, m.qos_bps);
        let (es, ms) = (e.stats.expect("exact samples"), m.stats.expect("mikp samples"));
        assert!(ms.std >= es.std, "group {} Mbps: mikp {} < exact {}", e.qos_bps / 1e6, ms.std, es.std);
        assert!(es.max <= e.qos_bps + eps + QOS_REL_TOL * e.qos_bps, "group {}: max {}", e.qos_bps, es.max);
        line += &format!(" q={}: {:.3} vs {:.3};", e.qos_bps / 1e6, ms.std / 1e6, es.std / 1e6);
    }
    println!("{line} exact feasible {:.1}%", 100.0 * exact.feasibility_rate);
}

#[test]
fn reports_are_byte_identical_across_worker_counts() {
    let mut cfg = reference();
    cfg.trials = DETERMINISM_TRIALS;
    let mut reports = Vec::new();
    for workers in DETERMINISM_WORKERS {
        cfg.workers = workers;
        let r = run_trials(&cfg).unwrap();
        reports.push((render_report(&r, OutputFormat::Csv).unwrap(), render_report(&r, OutputFormat::Json).unwrap()));
    }
    cfg.workers = DETERMINISM_WORKERS[0];
    let again = run_trials(&cfg).unwrap();
    assert_eq!(render_report(&again, OutputFormat::Json).unwrap(), reports[0].1);
    for (i, rep) in reports.iter().enumerate().skip(1) {
        assert_eq!(rep.0, reports[0].0, "csv differs at {} workers", DETERMINISM_WORKERS[i]);
        assert_eq!(rep.1, reports[0].1, "json differs at {} workers", DETERMINISM_WORKERS[i]);
    }
    println!("determinism: {DETERMINISM_TRIALS}-trial reports identical at workers {DETERMINISM_WORKERS:?} and on rerun");
}

fn to_u32(v: &Array2<u8>) -> Array2<u32> {
    v.mapv(u32::from)
}

fn fired(u: &Array1<u32>, w: &Array1<u32>, width: usize) -> BTreeSet<(usize, usize)> {
    u.iter().zip(w).enumerate().filter(|(_, (a, b))| **a * **b != 0).map(|(ix, _)| (ix / width, ix % width)).collect()
}

#[test]
fn matrix_and_direct_checks_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e1f);
    let mut violating = 0;
    for i in 0..VERIFIER_ASSIGNMENTS {
        let n = rng.gen_range(1..=6usize);
        let (k, l) = (rng.gen_range(1..=3usize), rng.gen_range(1..=4usize));
        let mut clusters: Vec<Vec<u32>> = (0..rng.gen_range(1..=3))
            .map(|_| (1..=n as u32).filter(|_| rng.gen_bool(0.5)).collect::<Vec<_>>())
            .filter(|c| !c.is_empty())
            .collect();
        for v in 1..=n as u32 {
            if !clusters.iter().any(|c| c.contains(&v)) {
                clusters.push(vec![v]);
            }
        }
        let s = Scenario::new(RawScenario { vehicles: n, clusters, qos_bps: vec![1e6; n], epsilon_bps: 1e9 }).unwrap();
        let g = ChannelGrid::with_default_bandwidth(l, k).unwrap();
        let cs = ConstraintSystem::new(&s, &g);
        let c = CapacityMap::from_rows(&vec![vec![1e6; k * l]; n], g).unwrap();
        let density = rng.gen_range(0.05..0.6);
        let rows: Vec<Vec<bool>> = (0..n).map(|_| (0..k * l).map(|_| rng.gen_bool(density)).collect()).collect();
        let a = Assignment::from_rows(&rows).unwrap();

        // Direct route, with the library's own cross-check inside.
        let report = verify(&a, &s, &g, &c, &cs).unwrap_or_else(|e| panic!("assignment {i}: {e}"));

        // Matrix route with explicit Kronecker products.
        let x = Array1::from_iter(a.as_slice().iter().map(|&b| u32::from(b)));
        let xs = Array1::from_iter(
            rows.iter().flat_map(|row| (0..l).map(move |f| row[f * k..(f + 1) * k].iter().map(|&b| u32::from(b)).sum::<u32>())),
        );
        let eye = |m: usize| Array2::<u32>::eye(m);
        let apply = |m: Array2<u32>, v: &Array1<u32>| m.dot(v);
        let m2 = fired(
            &apply(kron(&to_u32(&cs.g_plus), &eye(l)), &xs),
            &apply(kron(&to_u32(&cs.g_minus), &eye(l)), &xs),
            l,
        );
        let m3: BTreeSet<usize> = fired(
            &apply(kron(&eye(n), &to_u32(&cs.q_plus)), &xs),
            &apply(kron(&eye(n), &to_u32(&cs.q_minus)), &xs),
            l,
        )
        .into_iter()
        .map(|(v, _)| v)
        .collect();
        let m4 = fired(
            &apply(kron(&to_u32(&cs.h_plus), &eye(k * l)), &x),
            &apply(kron(&to_u32(&cs.h_minus), &eye(k * l)), &x),
            k * l,
        );

        let index = |pairs: &[v2v_alloc::scenario::VehiclePair], p| pairs.iter().position(|q| *q == p).unwrap();
        let d2: BTreeSet<_> = report.type2.iter().map(|c| (index(&cs.intra_pairs, c.pair), c.subframe)).collect();
        let d3: BTreeSet<_> = report.type3.iter().map(|t| t.vehicle.index()).collect();
        let d4: BTreeSet<_> = report.type4.iter().map(|c| (index(&cs.hop_pairs, c.pair), c.subchannel)).collect();
        assert_eq!(m2, d2, "assignment {i}: type II");
        assert_eq!(m3, d3, "assignment {i}: type III");
        assert_eq!(m4, d4, "assignment {i}: type IV");
        if !report.is_conflict_free() {
            violating += 1;
        }
    }
    println!("verifier: {VERIFIER_ASSIGNMENTS} assignments, matrix and direct routes agree ({violating} with conflicts)");
    assert!(violating > VERIFIER_ASSIGNMENTS / 10 && violating < VERIFIER_ASSIGNMENTS * 9 / 10);
}
