use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::channel::{generate_capacities, ChannelModelParams};
use crate::constraints::verify;
use crate::example::{motivating_topology, worked_example};
use crate::mikp::{run_mikp, DEFAULT_RESOLUTION_BPS};
use crate::scenario::RawScenario;

const MBPS: f64 = 1e6;

fn scenario(n: usize, clusters: &[&[u32]], qos_mbps: &[f64], eps_mbps: f64) -> Scenario {
    Scenario::new(RawScenario {
        vehicles: n,
        clusters: clusters.iter().map(|c| c.to_vec()).collect(),
        qos_bps: qos_mbps.iter().map(|q| q * MBPS).collect(),
        epsilon_bps: eps_mbps * MBPS,
    })
    .unwrap()
}

fn rates(g: &ChannelGrid, rows_mbps: &[&[f64]]) -> CapacityMap {
    let rows: Vec<Vec<f64>> = rows_mbps.iter().map(|r| r.iter().map(|x| x * MBPS).collect()).collect();
    CapacityMap::from_rows(&rows, *g).unwrap()
}

fn both(s: &Scenario, g: &ChannelGrid, c: &CapacityMap) -> (SolveResult, SolveResult) {
    let cs = ConstraintSystem::new(s, g);
    let exact = solve_exact(s, g, c, &cs, &SolverOptions::default()).unwrap();
    let brute = brute_force_solve(s, g, c, &cs).unwrap();
    (exact, brute)
}

fn rows_of(r: &SolveResult) -> Vec<Vec<usize>> {
    let a = r.assignment.as_ref().unwrap();
    (1..=a.vehicle_count() as u32).map(|v| a.subchannels_of(VehicleId(v)).collect()).collect()
}

#[test]
fn single_vehicle_subset_choice() {
    // {3,5} = 8 is in [7.5, 8.5]; {4,5} = 9 and everything else is outside.
    let s = scenario(1, &[&[1]], &[8.0], 0.5);
    let g = ChannelGrid::with_default_bandwidth(1, 3).unwrap();
    let c = rates(&g, &[&[3.0, 4.0, 5.0]]);
    let (exact, brute) = both(&s, &g, &c);
    assert_eq!(exact.status, SolveStatus::Optimal);
    assert_eq!(rows_of(&exact), vec![vec![0, 2]]);
    assert!((exact.objective_bps - 8.0 * MBPS).abs() < 1e-6);
    assert_eq!(brute.assignment, exact.assignment);
}

#[test]
fn unreachable_demand() {
    let s = scenario(1, &[&[1]], &[13.0], 0.5);
    let g = ChannelGrid::with_default_bandwidth(1, 3).unwrap();
    let c = rates(&g, &[&[3.0, 4.0, 5.0]]);
    let (exact, brute) = both(&s, &g, &c);
    assert_eq!(exact.status, SolveStatus::Infeasible);
    assert_eq!(brute.status, SolveStatus::Infeasible);
    assert!(exact.assignment.is_none());
    assert_eq!(exact.objective_bps, 0.0);
}

#[test]
fn two_vehicles_split_subframes() {
    let s = scenario(2, &[&[1, 2]], &[5.0, 5.0], 0.0);
    let g = ChannelGrid::with_default_bandwidth(2, 1).unwrap();
    let c = rates(&g, &[&[5.0, 4.0], &[4.0, 5.0]]);
    let (exact, brute) = both(&s, &g, &c);
    assert_eq!(exact.status, SolveStatus::Optimal);
    assert_eq!(rows_of(&exact), vec![vec![0], vec![1]]);
    assert_eq!(exact.objective_bps, 10.0 * MBPS);
    assert_eq!(brute.assignment, exact.assignment);
}

#[test]
fn zero_capacity_is_infeasible() {
    let s = scenario(2, &[&[1, 2]], &[1.0, 1.0], 0.5);
    let g = ChannelGrid::with_default_bandwidth(2, 2).unwrap();
    let c = rates(&g, &[&[0.0; 4], &[0.0; 4]]);
    let (exact, brute) = both(&s, &g, &c);
    assert_eq!(exact.status, SolveStatus::Infeasible);
    assert_eq!(brute.status, SolveStatus::Infeasible);
}

#[test]
fn inactive_window_leaves_only_conflicts() {
    // Two vehicles of one cluster on L=2, K=2: each takes a whole subframe.
    let s = scenario(2, &[&[1, 2]], &[0.001, 0.001], 100.0);
    let g = ChannelGrid::with_default_bandwidth(2, 2).unwrap();
    let c = rates(&g, &[&[1.0, 2.0, 3.0, 4.0], &[4.0, 4.0, 1.0, 1.0]]);
    let (exact, brute) = both(&s, &g, &c);
    assert_eq!(exact.objective_bps, 15.0 * MBPS);
    assert_eq!(rows_of(&exact), vec![vec![2, 3], vec![0, 1]]);
    assert_eq!(brute.assignment, exact.assignment);
}

#[test]
fn silent_vehicle_when_window_includes_zero() {
    // Three vehicles, one subframe: only one may transmit.
    let s = scenario(3, &[&[1, 2, 3]], &[1.0, 1.0, 1.0], 1.0);
    let g = ChannelGrid::with_default_bandwidth(1, 1).unwrap();
    let c = rates(&g, &[&[1.5], &[2.0], &[0.5]]);
    let (exact, brute) = both(&s, &g, &c);
    assert_eq!(rows_of(&exact), vec![vec![], vec![0], vec![]]);
    assert_eq!(brute.assignment, exact.assignment);
}

#[test]
fn equal_optima_pick_smallest_matrix() {
    let s = scenario(1, &[&[1]], &[2.0], 0.0);
    let g = ChannelGrid::with_default_bandwidth(2, 2).unwrap();
    let c = rates(&g, &[&[2.0, 2.0, 2.0, 2.0]]);
    let (exact, brute) = both(&s, &g, &c);
    // The last subchannel gives the row 0001, smallest among single bits.
    assert_eq!(rows_of(&exact), vec![vec![3]]);
    assert_eq!(brute.assignment, exact.assignment);
}

#[test]
fn worked_example_solves() {
    let (s, g) = worked_example();
    let cs = ConstraintSystem::new(&s, &g);
    for seed in 0..20 {
        let c = generate_capacities(&s, &g, &ChannelModelParams { seed, ..Default::default() }).unwrap();
        let r = solve_exact(&s, &g, &c, &cs, &SolverOptions::default()).unwrap();
        if let Some(a) = &r.assignment {
            assert!(verify(a, &s, &g, &c, &cs).unwrap().is_empty());
        }
    }
}

#[test]
fn brute_force_guard() {
    let (s, g) = worked_example();
    let cs = ConstraintSystem::new(&s, &g);
    let c = generate_capacities(&s, &g, &ChannelModelParams::default()).unwrap();
    assert!(matches!(
        brute_force_solve(&s, &g, &c, &cs),
        Err(SolveError::InstanceTooLarge { cells: 36, max: 16 })
    ));
}

#[test]
fn rejects_inconsistent_inputs() {
    let s = scenario(2, &[&[1, 2]], &[1.0, 1.0], 0.5);
    let g = ChannelGrid::with_default_bandwidth(2, 2).unwrap();
    let other = ChannelGrid::with_default_bandwidth(1, 2).unwrap();
    let c = rates(&g, &[&[1.0; 4], &[1.0; 4]]);
    let cs = ConstraintSystem::new(&s, &other);
    let opt = SolverOptions::default();
    assert!(matches!(solve_exact(&s, &g, &c, &cs, &opt), Err(SolveError::InconsistentInputs(_))));
    let cs = ConstraintSystem::new(&s, &g);
    let c = rates(&other, &[&[1.0; 2], &[1.0; 2]]);
    assert!(matches!(solve_exact(&s, &g, &c, &cs, &opt), Err(SolveError::InconsistentInputs(_))));
}

#[test]
fn node_limit_reports_timeout() {
    let (s, g) = motivating_topology(8, 3);
    let cs = ConstraintSystem::new(&s, &g);
    let c = generate_capacities(&s, &g, &ChannelModelParams::default()).unwrap();
    let opt = SolverOptions { node_limit: 3, ..Default::default() };
    let r = solve_exact(&s, &g, &c, &cs, &opt).unwrap();
    assert_eq!(r.status, SolveStatus::Timeout);
    if let Some(a) = &r.assignment {
        assert!(verify(a, &s, &g, &c, &cs).unwrap().is_conflict_free());
    }
}

/// Random instance with `N * K * L <= 16`.
pub(crate) fn micro_instance(rng: &mut ChaCha8Rng) -> (Scenario, ChannelGrid, CapacityMap) {
    let (n, k, l) = loop {
        let t = (rng.gen_range(1..=4), rng.gen_range(1..=3), rng.gen_range(1..=4));
        if t.0 * t.1 * t.2 <= BRUTE_FORCE_MAX_CELLS {
            break t;
        }
    };
    let mut clusters: Vec<Vec<u32>> = (0..rng.gen_range(1..=3))
        .map(|_| (1..=n as u32).filter(|_| rng.gen_bool(0.6)).collect::<Vec<_>>())
        .filter(|c: &Vec<u32>| !c.is_empty())
        .collect();
    for v in 1..=n as u32 {
        if !clusters.iter().any(|c| c.contains(&v)) {
            clusters.push(vec![v]);
        }
    }
    let g = ChannelGrid::with_default_bandwidth(l, k).unwrap();
    let eps = [0.0, 0.5e6, 1e9][rng.gen_range(0..3)];
    let rows: Vec<Vec<f64>> =
        (0..n).map(|_| (0..k * l).map(|_| rng.gen_range(0.0..8.0f64).round() * 0.5e6).collect()).collect();
    // Demands drawn near achievable sums so the window is sometimes hit.
    let qos = (0..n).map(|_| rng.gen_range(1..=16) as f64 * 0.5e6).collect();
    let s = Scenario::new(RawScenario { vehicles: n, clusters, qos_bps: qos, epsilon_bps: eps }).unwrap();
    let c = CapacityMap::from_rows(&rows, g).unwrap();
    (s, g, c)
}

#[test]
fn agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb0b);
    let mut optimal = 0;
    for trial in 0..400 {
        let (s, g, c) = micro_instance(&mut rng);
        let cs = ConstraintSystem::new(&s, &g);
        let exact = solve_exact(&s, &g, &c, &cs, &SolverOptions::default()).unwrap();
        let brute = brute_force_solve(&s, &g, &c, &cs).unwrap();
        assert_eq!(exact.status, brute.status, "trial {trial}");
        assert!((exact.objective_bps - brute.objective_bps).abs() <= 1e-6 * brute.objective_bps.max(1.0));
        assert_eq!(exact.assignment, brute.assignment, "trial {trial}");

        let plain = SolverOptions { bound_pruning: false, ..Default::default() };
        let unpruned = solve_exact(&s, &g, &c, &cs, &plain).unwrap();
        assert_eq!(unpruned.assignment, exact.assignment, "trial {trial}");

        if let Some(a) = &exact.assignment {
            optimal += 1;
            assert!(verify(a, &s, &g, &c, &cs).unwrap().is_empty());
        }
    }
    // Both outcomes are exercised.
    assert!(optimal > 40 && optimal < 360, "{optimal} optimal");
}

#[test]
fn dominates_heuristic_when_it_meets_demands() {
    // With eps = q every heuristic rate (capped at q) lies in its window.
    let (s, g) = motivating_topology(6, 3);
    let s = s.with_epsilon(2e6).unwrap();
    let mut compared = 0;
    for seed in 0..60 {
        let cs = ConstraintSystem::new(&s, &g);
        let c = generate_capacities(&s, &g, &ChannelModelParams { seed, ..Default::default() }).unwrap();
        let exact = solve_exact(&s, &g, &c, &cs, &SolverOptions::default()).unwrap();
        let mikp = run_mikp(&s, &g, &c, &cs, seed, DEFAULT_RESOLUTION_BPS).unwrap();
        let a = mikp.assignment.as_ref().unwrap();
        if verify(a, &s, &g, &c, &cs).unwrap().is_empty() {
            compared += 1;
            assert_eq!(exact.status, SolveStatus::Optimal);
            assert!(exact.objective_bps >= mikp.objective_bps - 1e-6);
        }
    }
    assert_eq!(compared, 60);
}

/// Up to ten vehicles, too many cells for brute force but small enough
/// for the column search to finish.
fn medium_instance(rng: &mut ChaCha8Rng) -> (Scenario, ChannelGrid, CapacityMap) {
    let (n, k, l) = (rng.gen_range(4..=10), rng.gen_range(1..=3), rng.gen_range(2..=5));
    let mut clusters: Vec<Vec<u32>> = (0..rng.gen_range(1..=4))
        .map(|_| (1..=n as u32).filter(|_| rng.gen_bool(0.45)).collect::<Vec<_>>())
        .filter(|c: &Vec<u32>| !c.is_empty())
        .collect();
    for v in 1..=n as u32 {
        if !clusters.iter().any(|c| c.contains(&v)) {
            clusters.push(vec![v]);
        }
    }
    let g = ChannelGrid::with_default_bandwidth(l, k).unwrap();
    let eps = [0.5e6, 1.5e6, 1e9][rng.gen_range(0..3)];
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..k * l).map(|_| rng.gen_range(0.0..6e6)).collect()).collect();
    let qos = (0..n).map(|_| rng.gen_range(1..=12) as f64 * 0.5e6).collect();
    let s = Scenario::new(RawScenario { vehicles: n, clusters, qos_bps: qos, epsilon_bps: eps }).unwrap();
    let c = CapacityMap::from_rows(&rows, g).unwrap();
    (s, g, c)
}

#[test]
fn placement_search_agrees_with_column_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut optimal = 0;
    for trial in 0..150 {
        let (s, g, c) = medium_instance(&mut rng);
        let cs = ConstraintSystem::new(&s, &g);
        let opt = SolverOptions::default();
        let placed = solve_with(&s, &g, &c, &cs, &opt, false).unwrap();
        let columns = solve_with(&s, &g, &c, &cs, &opt, true).unwrap();
        assert_eq!(placed.status, columns.status, "trial {trial}");
        assert!((placed.objective_bps - columns.objective_bps).abs() <= 1e-6 * columns.objective_bps.max(1.0));
        assert_eq!(placed.assignment, columns.assignment, "trial {trial}");
        if let Some(a) = &placed.assignment {
            optimal += 1;
            assert!(verify(a, &s, &g, &c, &cs).unwrap().is_empty(), "trial {trial}");
        }
    }
    assert!((20..140).contains(&optimal), "{optimal} optimal instances");
}

#[test]
fn full_clusters_force_one_member_per_subframe() {
    // Each cluster fills all three subframes, so the two subframes without
    // v1 each hold one of {v2, v5}, {v3, v6} and {v4, v7}. Those three
    // conflict pairwise and get one subchannel each, but v5 needs two.
    let s = scenario(7, &[&[1, 2, 5], &[1, 3, 6], &[1, 4, 7]], &[2.0, 2.0, 2.0, 2.0, 4.0, 2.0, 2.0], 0.5);
    let g = ChannelGrid::with_default_bandwidth(3, 3).unwrap();
    let row: &[f64] = &[2.0; 9];
    let c = rates(&g, &[row; 7]);
    let cs = ConstraintSystem::new(&s, &g);
    let opt = SolverOptions::default();
    assert_eq!(solve_with(&s, &g, &c, &cs, &opt, true).unwrap().status, SolveStatus::Infeasible);
    let placed = solve_with(&s, &g, &c, &cs, &opt, false).unwrap();
    assert_eq!(placed.status, SolveStatus::Infeasible);
    assert!(placed.diagnostics.nodes_explored <= 2, "{} nodes", placed.diagnostics.nodes_explored);

    // With v5 at 2 Mbps everyone fits.
    let s = scenario(7, &[&[1, 2, 5], &[1, 3, 6], &[1, 4, 7]], &[2.0; 7], 0.5);
    let placed = solve_with(&s, &g, &c, &cs, &opt, false).unwrap();
    assert_eq!(placed.status, SolveStatus::Optimal);
    assert!((placed.objective_bps - 14.0 * MBPS).abs() < 1e-6);
}
