//! Depth-first branch and bound over one connected component.
//!
//! Every node bounds its subtree with the Lagrangian relaxation of the
//! unit-capacity resources: for multipliers `lambda >= 0`,
//!
//! ```text
//! fixed value + sum over free resources of lambda_r
//!             + sum over open vehicles of max over usable columns (rate - lambda . a)
//! ```
//!
//! is an upper bound for any completion. Multipliers are tuned once per
//! component by projected subgradient steps and then kept fixed.

use std::cmp::Ordering;
use std::time::Instant;

use super::model::{Column, Model};

/// Node budget and deadline shared by all components of one solve.
pub(crate) struct Limits {
    pub deadline: Option<Instant>,
    pub node_limit: Option<u64>,
    pub nodes: u64,
    pub hit: bool,
}

impl Limits {
    pub fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.node_limit.is_some_and(|cap| self.nodes > cap) {
            self.hit = true;
        }
        if self.nodes.is_multiple_of(1024) && self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.hit = true;
        }
        self.hit
    }
}

pub(crate) enum Outcome {
    /// Column index per component vehicle.
    Optimal(Vec<usize>),
    Infeasible,
    /// Stopped early, with the incumbent if one was found.
    Stopped(Option<Vec<usize>>),
}

struct Col {
    value: f64,
    reduced: f64,
    /// Index into the model's column list, used for tie-breaking.
    source: usize,
    resources: Vec<u32>,
}

struct Search<'a> {
    model: &'a Model,
    vehicles: &'a [usize],
    /// Branching preference rank per local vehicle, lower first.
    rank: Vec<usize>,
    cols: Vec<Vec<Col>>,
    lambda: Vec<f64>,
    occupied: Vec<bool>,
    free_lambda: f64,
    chosen: Vec<Option<usize>>,
    best: Option<(f64, Vec<usize>)>,
    pruning: bool,
    k: usize,
}

pub(crate) fn tolerance(value: f64) -> f64 {
    1e-9 * value.abs().max(1.0)
}

/// Rows compared as 0/1 vectors: the first position where they differ
/// decides, and the row with the 0 there is the smaller one.
pub(crate) fn cmp_rows(a: &Column, b: &Column, k: usize) -> Ordering {
    let mut x = a.subchannels(k).collect::<Vec<_>>().into_iter();
    let mut y = b.subchannels(k).collect::<Vec<_>>().into_iter();
    loop {
        match (x.next(), y.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(p), Some(q)) if p < q => return Ordering::Greater,
            (Some(p), Some(q)) if p > q => return Ordering::Less,
            _ => {}
        }
    }
}

/// Whether a complete candidate beats the incumbent: strictly larger, or
/// equal within tolerance and lexicographically smaller as a matrix.
/// `cand` holds model column indices per component vehicle.
pub(crate) fn improves(
    best: &Option<(f64, Vec<usize>)>,
    value: f64,
    cand: &[usize],
    model: &Model,
    vehicles: &[usize],
    k: usize,
) -> bool {
    let Some((best, incumbent)) = best else { return true };
    if value > best + tolerance(*best) {
        return true;
    }
    if value < best - tolerance(*best) {
        return false;
    }
    for (i, &v) in vehicles.iter().enumerate() {
        let cols = &model.columns[v];
        match cmp_rows(&cols[cand[i]], &cols[incumbent[i]], k) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

impl<'a> Search<'a> {
    fn new(model: &'a Model, vehicles: &'a [usize], qos: &[f64], pruning: bool, k: usize) -> Self {
        // Local resource numbering.
        let mut ids: Vec<u32> =
            vehicles.iter().flat_map(|&v| model.vehicle_resources[v].iter().copied()).collect();
        ids.sort_unstable();
        ids.dedup();
        let local = |r: u32| ids.binary_search(&r).expect("resource of a component vehicle") as u32;

        let cols = vehicles
            .iter()
            .map(|&v| {
                model.columns[v]
                    .iter()
                    .enumerate()
                    .map(|(source, c)| Col {
                        value: c.rate,
                        reduced: c.rate,
                        source,
                        resources: c.resources.iter().map(|&r| local(r)).collect(),
                    })
                    .collect()
            })
            .collect();

        let mut order: Vec<usize> = (0..vehicles.len()).collect();
        order.sort_by(|&a, &b| qos[vehicles[b]].total_cmp(&qos[vehicles[a]]).then(a.cmp(&b)));
        let mut rank = vec![0; vehicles.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }

        Self {
            model,
            vehicles,
            rank,
            cols,
            lambda: vec![0.0; ids.len()],
            occupied: vec![false; ids.len()],
            free_lambda: 0.0,
            chosen: vec![None; vehicles.len()],
            best: None,
            pruning,
            k,
        }
    }

    fn usable(&self, col: &Col) -> bool {
        col.resources.iter().all(|&r| !self.occupied[r as usize])
    }

    fn set_lambda(&mut self, lambda: Vec<f64>) {
        for cols in &mut self.cols {
            for c in cols.iter_mut() {
                c.reduced = c.value - c.resources.iter().map(|&r| lambda[r as usize]).sum::<f64>();
            }
            // Stable: equal reduced values keep the model's column order.
            cols.sort_by(|a, b| b.reduced.total_cmp(&a.reduced));
        }
        self.free_lambda = lambda.iter().sum();
        self.lambda = lambda;
    }

    /// Projected subgradient on the root relaxation. `target` is a known
    /// feasible objective, if any.
    fn tune_multipliers(&mut self, target: Option<f64>, iterations: usize) {
        let n_res = self.lambda.len();
        if n_res == 0 {
            return;
        }
        let mut lambda = vec![0.0; n_res];
        let mut best = (f64::INFINITY, lambda.clone());
        let mut theta = 2.0;
        let mut stall = 0;
        let mut usage = vec![0u32; n_res];
        for _ in 0..iterations {
            usage.iter_mut().for_each(|u| *u = 0);
            let mut bound: f64 = lambda.iter().sum();
            for cols in &self.cols {
                let mut pick: Option<(f64, &Col)> = None;
                for c in cols {
                    let red = c.value - c.resources.iter().map(|&r| lambda[r as usize]).sum::<f64>();
                    if pick.is_none_or(|(v, _)| red > v) {
                        pick = Some((red, c));
                    }
                }
                let Some((red, c)) = pick else { return };
                bound += red;
                for &r in &c.resources {
                    usage[r as usize] += 1;
                }
            }
            if bound < best.0 - tolerance(bound) {
                best = (bound, lambda.clone());
                stall = 0;
            } else {
                stall += 1;
                if stall >= 10 {
                    theta /= 2.0;
                    stall = 0;
                }
            }
            let gap = match target {
                Some(t) if bound - t <= tolerance(t) => break,
                Some(t) => bound - t,
                None => 0.05 * bound.abs().max(1.0),
            };
            let mut norm = 0.0;
            for r in 0..n_res {
                let g = 1.0 - usage[r] as f64;
                if !(lambda[r] == 0.0 && g > 0.0) {
                    norm += g * g;
                }
            }
            if norm == 0.0 || theta < 1e-3 {
                break;
            }
            let step = theta * gap / norm;
            for r in 0..n_res {
                lambda[r] = (lambda[r] - step * (1.0 - usage[r] as f64)).max(0.0);
            }
        }
        self.set_lambda(best.1);
    }

    fn apply(&mut self, i: usize, c: usize, on: bool) {
        let col = &self.cols[i][c];
        for &r in &col.resources {
            self.occupied[r as usize] = on;
            if on {
                self.free_lambda -= self.lambda[r as usize];
            } else {
                self.free_lambda += self.lambda[r as usize];
            }
        }
        self.chosen[i] = on.then_some(c);
    }

    fn candidate(&self) -> Vec<usize> {
        self.chosen.iter().enumerate().map(|(i, c)| self.cols[i][c.expect("complete")].source).collect()
    }

    fn dfs(&mut self, fixed_value: f64, limits: &mut Limits) {
        if limits.tick() {
            return;
        }
        let mut bound = fixed_value + self.free_lambda;
        let mut branch: Option<(usize, usize)> = None;
        for i in 0..self.cols.len() {
            if self.chosen[i].is_some() {
                continue;
            }
            let mut count = 0;
            let mut top = f64::NEG_INFINITY;
            for c in &self.cols[i] {
                if self.usable(c) {
                    if count == 0 {
                        top = c.reduced;
                    }
                    count += 1;
                }
            }
            if count == 0 {
                return;
            }
            bound += top;
            let better = match branch {
                None => true,
                Some((j, n)) => (count, self.rank[i]) < (n, self.rank[j]),
            };
            if better {
                branch = Some((i, count));
            }
        }

        let Some((i, _)) = branch else {
            let cand = self.candidate();
            if improves(&self.best, fixed_value, &cand, self.model, self.vehicles, self.k) {
                self.best = Some((fixed_value, cand));
            }
            return;
        };
        if self.pruning {
            if let Some((best, _)) = &self.best {
                if bound < best - tolerance(*best) {
                    return;
                }
            }
        }

        for c in 0..self.cols[i].len() {
            if !self.usable(&self.cols[i][c]) {
                continue;
            }
            let value = self.cols[i][c].value;
            self.apply(i, c, true);
            self.dfs(fixed_value + value, limits);
            self.apply(i, c, false);
            if limits.hit {
                return;
            }
        }
    }
}

/// Solves one component. `qos` is indexed by global vehicle index.
pub(crate) fn solve_component(
    model: &Model,
    vehicles: &[usize],
    qos: &[f64],
    k: usize,
    pruning: bool,
    limits: &mut Limits,
) -> Outcome {
    let mut search = Search::new(model, vehicles, qos, pruning, k);
    if search.cols.iter().any(|c| c.is_empty()) {
        return Outcome::Infeasible;
    }

    if pruning && vehicles.len() > 1 {
        // A short dive without bounding supplies a target for the
        // multiplier steps.
        let cap = limits.nodes + 20 * vehicles.len() as u64;
        let mut probe = Limits {
            deadline: limits.deadline,
            node_limit: Some(limits.node_limit.map_or(cap, |c| c.min(cap))),
            nodes: limits.nodes,
            hit: false,
        };
        search.pruning = false;
        search.dfs(0.0, &mut probe);
        search.pruning = true;
        limits.nodes = probe.nodes;
        if !probe.hit {
            // The dive enumerated the whole component.
            return match search.best {
                Some((_, choice)) => Outcome::Optimal(choice),
                None => Outcome::Infeasible,
            };
        }
        if limits.node_limit.is_some_and(|c| probe.nodes > c) || limits.deadline.is_some_and(|d| Instant::now() >= d) {
            limits.hit = true;
            return Outcome::Stopped(search.best.map(|b| b.1));
        }
        let target = search.best.as_ref().map(|b| b.0);
        search.tune_multipliers(target, 300);
    }

    search.dfs(0.0, limits);
    match (limits.hit, search.best) {
        (true, best) => Outcome::Stopped(best.map(|b| b.1)),
        (false, Some((_, choice))) => Outcome::Optimal(choice),
        (false, None) => Outcome::Infeasible,
    }
}
