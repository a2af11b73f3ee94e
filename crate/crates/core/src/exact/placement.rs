//! Branch and bound over vehicle-to-subframe placements.
//!
//! Once every vehicle has a subframe, choosing subchannels splits into one
//! small packing problem per subframe, which is solved exactly. Open
//! subtrees are bounded by relaxing "each vehicle sits in exactly one
//! subframe" with a multiplier `mu_i` per open vehicle:
//!
//! ```text
//! L(mu) = sum_i mu_i + sum_l max over packings P of subframe l of sum_{i in P} (rate_i - mu_i)
//! ```
//!
//! where packings of `l` must contain the vehicles already placed there.
//! Each subframe term is a dynamic program over that subframe's resources.
//! Nodes are also checked with matchings: cluster members need distinct
//! subframes and clique members need distinct subchannels.

use std::collections::HashMap;
use std::time::Instant;

use rustc_hash::FxHashMap;

use super::model::Model;
use super::search::{cmp_rows, improves, tolerance, Limits, Outcome};

/// Subframes touching more resources than this are left to the column
/// search.
pub(crate) const MAX_FRAME_BITS: usize = 12;
const MAX_VEHICLES: usize = 128;
const MAX_FRAMES: usize = 64;

const ROOT_ITERATIONS: usize = 150;
const NODE_ITERATIONS: usize = 12;
const DIVE_ROUNDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Open,
    Silent,
    Frame(usize),
}

struct PCol {
    value: f64,
    mask: u64,
    source: usize,
}

#[derive(Clone)]
struct Packing {
    value: f64,
    /// Column per occupant in index order, indexing `cols[i][l]`.
    cols: Vec<usize>,
}

fn members(set: u128) -> impl Iterator<Item = usize> {
    let mut rest = set;
    std::iter::from_fn(move || {
        (rest != 0).then(|| {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            i
        })
    })
}

fn frames_of(mask: u64) -> impl Iterator<Item = usize> {
    members(mask as u128)
}

struct Search<'a> {
    model: &'a Model,
    vehicles: &'a [usize],
    k: usize,
    bits: Vec<usize>,
    /// `cols[i][l]`, by descending rate.
    cols: Vec<Vec<Vec<PCol>>>,
    /// Fewest subchannels any column of `i` in `l` uses.
    need: Vec<Vec<u32>>,
    /// Union of the subchannel masks of `i`'s columns in `l`.
    chan: Vec<Vec<u8>>,
    /// `compat[l][i]`: vehicles that can share subframe `l` with `i`.
    compat: Vec<Vec<u128>>,
    silent: Vec<Option<usize>>,
    rank: Vec<usize>,
    clusters: Vec<Vec<usize>>,
    cliques: Vec<Vec<usize>>,
    slot: Vec<Slot>,
    occupants: Vec<u128>,
    memo: Vec<FxHashMap<u128, Option<Packing>>>,
    /// Completion results of the current `fill` pass.
    completions: FxHashMap<(usize, u128), bool>,
    mu: Vec<f64>,
    /// Subframe (or `None` for silence) the best relaxation chose.
    hint: Vec<Option<usize>>,
    best: Option<(f64, Vec<usize>)>,
    /// Sum of the cheapest column of every vehicle.
    floor: f64,
    pruning: bool,
    /// Stop at the first improving placement.
    dive: bool,
    found: bool,
    dp: Vec<f64>,
    next: Vec<f64>,
    choice: Vec<u8>,
}

impl<'a> Search<'a> {
    fn new(model: &'a Model, vehicles: &'a [usize], qos: &[f64], k: usize, frames: usize) -> Option<Self> {
        let n = vehicles.len();
        if n > MAX_VEHICLES || frames > MAX_FRAMES {
            return None;
        }
        // Per-subframe resource numbering.
        let mut frame_res: Vec<Vec<u32>> = vec![Vec::new(); frames];
        for &v in vehicles {
            for c in model.columns[v].iter().filter(|c| c.subframe < frames) {
                frame_res[c.subframe].extend(&c.resources);
            }
        }
        for r in &mut frame_res {
            r.sort_unstable();
            r.dedup();
        }
        let bits: Vec<usize> = frame_res.iter().map(Vec::len).collect();
        if bits.iter().any(|&b| b > MAX_FRAME_BITS) {
            return None;
        }

        let mut cols: Vec<Vec<Vec<PCol>>> = Vec::with_capacity(n);
        let mut need = Vec::with_capacity(n);
        let mut chan = Vec::with_capacity(n);
        let mut silent = Vec::with_capacity(n);
        for &v in vehicles {
            let mut per_frame: Vec<Vec<PCol>> = (0..frames).map(|_| Vec::new()).collect();
            let mut fewest = vec![u32::MAX; frames];
            let mut union = vec![0u8; frames];
            let mut quiet = None;
            for (source, c) in model.columns[v].iter().enumerate() {
                let l = c.subframe;
                if l >= frames {
                    quiet = Some(source);
                    continue;
                }
                let table = &frame_res[l];
                let mask = c.resources.iter().fold(0u64, |m, r| m | 1 << table.binary_search(r).expect("indexed"));
                per_frame[l].push(PCol { value: c.rate, mask, source });
                fewest[l] = fewest[l].min(c.mask.count_ones());
                union[l] |= c.mask;
            }
            for list in &mut per_frame {
                list.sort_by(|a, b| b.value.total_cmp(&a.value));
            }
            cols.push(per_frame);
            need.push(fewest);
            chan.push(union);
            silent.push(quiet);
        }

        let mut compat = vec![vec![0u128; n]; frames];
        for (l, row) in compat.iter_mut().enumerate() {
            for i in 0..n {
                for j in i + 1..n {
                    let together =
                        cols[i][l].iter().any(|a| cols[j][l].iter().any(|b| a.mask & b.mask == 0));
                    if together {
                        row[i] |= 1 << j;
                        row[j] |= 1 << i;
                    }
                }
            }
        }

        let local: HashMap<usize, usize> = vehicles.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let localise = |groups: &[Vec<usize>]| -> Vec<Vec<usize>> {
            groups
                .iter()
                .map(|c| c.iter().filter_map(|v| local.get(v).copied()).collect::<Vec<_>>())
                .filter(|c| c.len() > 1)
                .collect()
        };
        let clusters = localise(&model.clusters);
        let cliques = localise(&model.cliques);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| qos[vehicles[b]].total_cmp(&qos[vehicles[a]]).then(a.cmp(&b)));
        let mut rank = vec![0; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }

        let floor = vehicles
            .iter()
            .map(|&v| model.columns[v].iter().map(|c| c.rate).fold(f64::INFINITY, f64::min))
            .filter(|r| r.is_finite())
            .sum();
        let states = 1 << bits.iter().copied().max().unwrap_or(0);
        Some(Self {
            model,
            vehicles,
            k,
            bits,
            cols,
            need,
            chan,
            compat,
            silent,
            rank,
            clusters,
            cliques,
            slot: vec![Slot::Open; n],
            occupants: vec![0; frames],
            memo: (0..frames).map(|_| FxHashMap::default()).collect(),
            completions: FxHashMap::default(),
            mu: vec![0.0; n],
            hint: vec![None; n],
            best: None,
            floor,
            pruning: true,
            dive: false,
            found: false,
            dp: vec![0.0; states],
            next: vec![0.0; states],
            choice: Vec::new(),
        })
    }

    fn frames(&self) -> usize {
        self.occupants.len()
    }

    /// Best packing of `set` into subframe `l`: largest total rate, ties to
    /// the lexicographically smallest rows.
    fn packing(&mut self, l: usize, set: u128) -> Option<&Packing> {
        if !self.memo[l].contains_key(&set) {
            let list: Vec<usize> = members(set).collect();
            let mut suffix = vec![0.0; list.len() + 1];
            for d in (0..list.len()).rev() {
                suffix[d] = suffix[d + 1] + self.cols[list[d]][l].first().map_or(0.0, |c| c.value);
            }
            let mut best = None;
            let mut pick = vec![0; list.len()];
            self.pack_dfs(l, &list, &suffix, 0, 0, 0.0, &mut pick, &mut best);
            self.memo[l].insert(set, best);
        }
        self.memo[l][&set].as_ref()
    }

    #[allow(clippy::too_many_arguments)]
    fn pack_dfs(
        &self,
        l: usize,
        set: &[usize],
        suffix: &[f64],
        depth: usize,
        used: u64,
        value: f64,
        pick: &mut Vec<usize>,
        best: &mut Option<Packing>,
    ) {
        if let Some(b) = best {
            if value + suffix[depth] < b.value - tolerance(b.value) {
                return;
            }
        }
        if depth == set.len() {
            let better = match best {
                None => true,
                Some(b) if value > b.value + tolerance(b.value) => true,
                Some(b) if value < b.value - tolerance(b.value) => false,
                Some(b) => self.rows_less(l, set, pick, &b.cols),
            };
            if better {
                *best = Some(Packing { value, cols: pick.clone() });
            }
            return;
        }
        let i = set[depth];
        for (c, col) in self.cols[i][l].iter().enumerate() {
            if col.mask & used == 0 {
                pick[depth] = c;
                self.pack_dfs(l, set, suffix, depth + 1, used | col.mask, value + col.value, pick, best);
            }
        }
    }

    fn rows_less(&self, l: usize, set: &[usize], a: &[usize], b: &[usize]) -> bool {
        for (d, &i) in set.iter().enumerate() {
            let cols = &self.model.columns[self.vehicles[i]];
            let (x, y) = (&cols[self.cols[i][l][a[d]].source], &cols[self.cols[i][l][b[d]].source]);
            match cmp_rows(x, y, self.k) {
                std::cmp::Ordering::Less => return true,
                std::cmp::Ordering::Greater => return false,
                std::cmp::Ordering::Equal => {}
            }
        }
        false
    }

    fn fits(&mut self, l: usize, i: usize) -> bool {
        let occ = self.occupants[l];
        !self.cols[i][l].is_empty()
            && occ & !self.compat[l][i] == 0
            && self.packing(l, occ | 1 << i).is_some()
    }

    fn transmits(&self, i: usize) -> bool {
        matches!(self.slot[i], Slot::Frame(_)) || (self.slot[i] == Slot::Open && self.silent[i].is_none())
    }

    /// Prunes the open vehicles' subframe domains with matchings: the
    /// members of a cluster that must transmit need distinct subframes, and
    /// the members of a clique need distinct subchannels. Returns false
    /// when no matching exists.
    fn propagate(&mut self, domains: &mut [u64]) -> bool {
        let mut filled = false;
        loop {
            let Some(changed) = self.matchings(domains) else { return false };
            if !changed {
                if filled {
                    return true;
                }
                filled = true;
                match self.fill(domains) {
                    None => return false,
                    Some(false) => return true,
                    Some(true) => {}
                }
            }
        }
    }

    /// One round of matching filters. `None` when infeasible, otherwise
    /// whether a domain shrank.
    fn matchings(&self, domains: &mut [u64]) -> Option<bool> {
        let frames = self.frames();
        let mut changed = false;
        {
            for cluster in &self.clusters {
                let needy: Vec<usize> =
                    cluster.iter().copied().filter(|&i| self.slot[i] == Slot::Open && self.silent[i].is_none()).collect();
                if needy.len() < 2 {
                    continue;
                }
                let wants: Vec<Vec<usize>> = needy.iter().map(|&i| frames_of(domains[i]).collect()).collect();
                let valid = supported(&wants, frames)?;
                for (&i, ok) in needy.iter().zip(valid) {
                    let kept = ok.iter().fold(0u64, |m, &l| m | 1 << l);
                    if kept != domains[i] {
                        domains[i] = kept;
                        changed = true;
                    }
                }
            }
            for clique in &self.cliques {
                let mut wants: Vec<Vec<usize>> = Vec::new();
                for &i in clique.iter().filter(|&&i| self.transmits(i)) {
                    let frames_i = match self.slot[i] {
                        Slot::Frame(l) => 1 << l,
                        _ => domains[i],
                    };
                    let copies = frames_of(frames_i).map(|l| self.need[i][l]).min().unwrap_or(0);
                    let slots: Vec<usize> = frames_of(frames_i)
                        .flat_map(|l| {
                            (0..self.k).filter(move |b| self.chan[i][l] >> b & 1 == 1).map(move |b| l * self.k + b)
                        })
                        .collect();
                    for _ in 0..copies {
                        wants.push(slots.clone());
                    }
                }
                if wants.len() > 1 && !perfect(&wants, frames * self.k) {
                    return None;
                }
            }
        }
        Some(changed)
    }

    /// Clusters whose must-transmit members exactly fill the subframes no
    /// placed member holds put one member in each of those subframes.
    /// Drops subframes from domains when that cannot be completed.
    fn fill(&mut self, domains: &mut [u64]) -> Option<bool> {
        let all = if self.frames() == 64 { u64::MAX } else { (1u64 << self.frames()) - 1 };
        let mut tight: Vec<(u128, Vec<usize>, u64)> = Vec::new();
        for cluster in &self.clusters {
            let whole = cluster.iter().fold(0u128, |m, &i| m | 1 << i);
            let mut held = 0u64;
            let mut needy = Vec::new();
            for &i in cluster {
                match self.slot[i] {
                    Slot::Frame(l) => held |= 1 << l,
                    Slot::Open if self.silent[i].is_none() => needy.push(i),
                    _ => {}
                }
            }
            let free = all & !held;
            match needy.len().cmp(&(free.count_ones() as usize)) {
                std::cmp::Ordering::Greater => return None,
                std::cmp::Ordering::Equal if !needy.is_empty() => tight.push((whole, needy, free)),
                _ => {}
            }
        }
        if tight.is_empty() {
            return Some(false);
        }
        self.completions.clear();
        for l in 0..self.frames() {
            if tight.iter().any(|(_, _, free)| free >> l & 1 == 1) && !self.complete(l, self.occupants[l], &tight, domains) {
                return None;
            }
        }
        let mut changed = false;
        for i in 0..self.slot.len() {
            if self.slot[i] != Slot::Open {
                continue;
            }
            for l in frames_of(domains[i]) {
                if !self.complete(l, self.occupants[l] | 1 << i, &tight, domains) {
                    domains[i] &= !(1 << l);
                    changed = true;
                }
            }
        }
        Some(changed)
    }

    /// Whether `set` can be packed into `l` together with one member of
    /// every tight cluster it lacks.
    fn complete(&mut self, l: usize, set: u128, tight: &[(u128, Vec<usize>, u64)], domains: &[u64]) -> bool {
        if let Some(&known) = self.completions.get(&(l, set)) {
            return known;
        }
        let allowed = members(set).fold(u128::MAX, |m, i| m & self.compat[l][i]);
        let mut lacking: Option<u128> = None;
        for (whole, needy, free) in tight {
            if free >> l & 1 == 0 || whole & set != 0 {
                continue;
            }
            let cands = needy.iter().filter(|&&j| domains[j] >> l & 1 == 1).fold(0u128, |m, &j| m | 1 << j) & allowed;
            if lacking.is_none_or(|c| cands.count_ones() < c.count_ones()) {
                lacking = Some(cands);
            }
        }
        let result = self.packing(l, set).is_some()
            && match lacking {
                None => true,
                Some(cands) => members(cands).any(|j| self.complete(l, set | 1 << j, tight, domains)),
            };
        self.completions.insert((l, set), result);
        result
    }

    /// Subframe term of the relaxation: best packing of `l` containing its
    /// occupants plus any subset of `allowed`, weighted by `rate - mu`.
    /// Returns the value and the open vehicles used.
    fn price(&mut self, l: usize, allowed: &[usize]) -> Option<(f64, Vec<usize>)> {
        const NONE: f64 = f64::NEG_INFINITY;
        let size = 1usize << self.bits[l];
        let mut dp = std::mem::take(&mut self.dp);
        let mut next = std::mem::take(&mut self.next);
        let mut choice = std::mem::take(&mut self.choice);
        dp[..size].fill(NONE);
        dp[0] = 0.0;
        let mut layers: Vec<usize> = Vec::new();
        choice.clear();
        for i in members(self.occupants[l]).chain(allowed.iter().copied()) {
            let forced = self.slot[i] != Slot::Open;
            let m = if forced { 0.0 } else { self.mu[i] };
            let list = &self.cols[i][l];
            if !forced && list.first().is_none_or(|c| c.value - m <= 0.0) {
                continue;
            }
            if forced {
                next[..size].fill(NONE);
            } else {
                next[..size].copy_from_slice(&dp[..size]);
            }
            let base = choice.len();
            choice.resize(base + size, 0);
            for (c, col) in list.iter().enumerate() {
                let w = col.value - m;
                if !forced && w <= 0.0 {
                    break;
                }
                let mask = col.mask as usize;
                for s in 0..size {
                    if s & mask != 0 || dp[s] == NONE {
                        continue;
                    }
                    let cand = dp[s] + w;
                    if cand > next[s | mask] {
                        next[s | mask] = cand;
                        choice[base + (s | mask)] = (c + 1) as u8;
                    }
                }
            }
            std::mem::swap(&mut dp, &mut next);
            layers.push(i);
        }
        let top = dp[..size].iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).filter(|(_, v)| *v > NONE);
        let result = top.map(|(mut state, value)| {
            let mut used = Vec::new();
            for (layer, &i) in layers.iter().enumerate().rev() {
                let c = choice[layer * size + state] as usize;
                if c > 0 {
                    if self.slot[i] == Slot::Open {
                        used.push(i);
                    }
                    state ^= self.cols[i][l][c - 1].mask as usize;
                }
            }
            (value, used)
        });
        self.dp = dp;
        self.next = next;
        self.choice = choice;
        result
    }

    /// Projected subgradient on `mu`, warm-started from the current
    /// multipliers, which are left at the best point found. Steps aim at
    /// `target` when known. Stops early once the bound drops below
    /// `threshold`.
    fn relax(&mut self, domains: &[u64], iterations: usize, target: Option<f64>, threshold: f64) -> f64 {
        let n = self.slot.len();
        let frames = self.frames();
        let open: Vec<usize> = (0..n).filter(|&i| self.slot[i] == Slot::Open).collect();
        let mut allowed: Vec<Vec<usize>> = vec![Vec::new(); frames];
        for &i in &open {
            for l in frames_of(domains[i]) {
                allowed[l].push(i);
            }
        }

        let mut best_bound = f64::INFINITY;
        let mut best_mu = self.mu.clone();
        let mut theta = 1.0;
        let mut stall = 0;
        let mut cover = vec![0u32; n];
        let mut hint = vec![None; n];
        let mut grad = vec![0.0; n];
        for _ in 0..iterations {
            let mut bound: f64 = open.iter().map(|&i| self.mu[i]).sum();
            cover.fill(0);
            hint.fill(None);
            for (l, list) in allowed.iter().enumerate() {
                let Some((v, used)) = self.price(l, list) else { return f64::NEG_INFINITY };
                bound += v;
                for i in used {
                    cover[i] += 1;
                    hint[i] = Some(l);
                }
            }
            if bound < best_bound - tolerance(bound) {
                best_bound = bound;
                best_mu.clone_from(&self.mu);
                for &i in &open {
                    self.hint[i] = hint[i];
                }
                stall = 0;
            } else {
                stall += 1;
                if stall >= 3 {
                    theta /= 2.0;
                    stall = 0;
                }
            }
            if best_bound < threshold {
                break;
            }

            let mut norm = 0.0;
            for &i in &open {
                let g = 1.0 - cover[i] as f64;
                grad[i] = if self.silent[i].is_some() && self.mu[i] <= 0.0 && g > 0.0 { 0.0 } else { g };
                norm += grad[i] * grad[i];
            }
            if norm == 0.0 {
                // Every open vehicle sits in at most one subframe, so the
                // relaxed choice is a complete placement.
                self.try_hint(&open, &hint);
                break;
            }
            let gap = match target {
                Some(t) => bound - t,
                None => 0.05 * bound.abs().max(1.0),
            };
            if gap <= 0.0 || theta < 1e-4 {
                break;
            }
            let step = theta * gap / norm;
            for &i in &open {
                self.mu[i] -= step * grad[i];
                if self.silent[i].is_some() {
                    self.mu[i] = self.mu[i].max(0.0);
                }
            }
        }
        self.mu = best_mu;
        best_bound
    }

    fn place(&mut self, i: usize, slot: Slot) {
        self.slot[i] = slot;
        if let Slot::Frame(l) = slot {
            self.occupants[l] |= 1 << i;
        }
    }

    fn unplace(&mut self, i: usize) {
        if let Slot::Frame(l) = self.slot[i] {
            self.occupants[l] &= !(1 << i);
        }
        self.slot[i] = Slot::Open;
    }

    /// Evaluates a complete placement.
    fn leaf(&mut self) {
        let n = self.slot.len();
        let mut cand = vec![0; n];
        let mut value = 0.0;
        for l in 0..self.frames() {
            let set = self.occupants[l];
            if set == 0 {
                continue;
            }
            let Some(p) = self.packing(l, set).cloned() else { return };
            value += p.value;
            for (i, c) in members(set).zip(p.cols) {
                cand[i] = self.cols[i][l][c].source;
            }
        }
        for (i, entry) in cand.iter_mut().enumerate() {
            if self.slot[i] == Slot::Silent {
                *entry = self.silent[i].expect("silent slot");
            }
        }
        if improves(&self.best, value, &cand, self.model, self.vehicles, self.k) {
            self.best = Some((value, cand));
            self.found = true;
        }
    }

    fn try_hint(&mut self, open: &[usize], hint: &[Option<usize>]) {
        for &i in open {
            match hint[i] {
                Some(l) => self.place(i, Slot::Frame(l)),
                None => self.place(i, Slot::Silent),
            }
        }
        self.leaf();
        for &i in open {
            self.unplace(i);
        }
    }

    /// `inherited` holds the parent's domains and `touched` the subframe
    /// that gained an occupant since; other subframes need no recheck.
    fn dfs(&mut self, limits: &mut Limits, inherited: &[u64], touched: Option<usize>) {
        if limits.tick() {
            return;
        }
        let n = self.slot.len();
        let open: Vec<usize> = (0..n).filter(|&i| self.slot[i] == Slot::Open).collect();
        if open.is_empty() {
            self.leaf();
            return;
        }
        let mut domains = inherited.to_vec();
        for &i in &open {
            if let Some(l) = touched {
                if domains[i] >> l & 1 == 1 && !self.fits(l, i) {
                    domains[i] &= !(1 << l);
                }
            }
            if domains[i] == 0 && self.silent[i].is_none() {
                return;
            }
        }
        if !self.propagate(&mut domains) {
            return;
        }
        if open.iter().any(|&i| domains[i] == 0 && self.silent[i].is_none()) {
            return;
        }

        let saved = self.pruning.then(|| self.mu.clone());
        if self.pruning {
            // Any completion is worth at least `floor`, and the incumbent
            // when there is one.
            let target = self.best.as_ref().map_or(self.floor, |b| b.0.max(self.floor));
            let threshold = target - tolerance(target);
            if self.relax(&domains, NODE_ITERATIONS, Some(target), threshold) < threshold {
                self.mu = saved.expect("saved");
                return;
            }
        }

        let i = *open
            .iter()
            .min_by_key(|&&i| (domains[i].count_ones() + self.silent[i].is_some() as u32, self.rank[i]))
            .expect("open vehicle");
        let mut options: Vec<Slot> = frames_of(domains[i]).map(Slot::Frame).collect();
        let score = |s: &Slot| match s {
            Slot::Frame(l) => (self.hint[i] == Some(*l), self.cols[i][*l][0].value),
            _ => (false, 0.0),
        };
        options.sort_by(|a, b| {
            let (ha, va) = score(a);
            let (hb, vb) = score(b);
            hb.cmp(&ha).then(vb.total_cmp(&va))
        });
        if self.silent[i].is_some() {
            if self.hint[i].is_none() {
                options.insert(0, Slot::Silent);
            } else {
                options.push(Slot::Silent);
            }
        }
        for slot in options {
            self.place(i, slot);
            let touched = match slot {
                Slot::Frame(l) => Some(l),
                _ => None,
            };
            self.dfs(limits, &domains, touched);
            self.unplace(i);
            if limits.hit || (self.dive && self.found) {
                break;
            }
        }
        if let Some(mu) = saved {
            self.mu = mu;
        }
    }
}

/// Matches every left vertex to a distinct right vertex and returns, per
/// left vertex, the right vertices it takes in at least one such matching.
/// `None` when no matching covers every left vertex.
fn supported(wants: &[Vec<usize>], right: usize) -> Option<Vec<Vec<usize>>> {
    if wants.len() > right {
        return None;
    }
    let mut owner: Vec<Option<usize>> = vec![None; right];
    let mut seen = vec![false; right];
    for a in 0..wants.len() {
        seen.fill(false);
        if !augment(a, wants, &mut owner, &mut seen) {
            return None;
        }
    }
    let mut mate = vec![0; wants.len()];
    for (r, o) in owner.iter().enumerate() {
        if let Some(a) = o {
            mate[*a] = r;
        }
    }

    // Moving a left vertex onto `r` frees its mate and displaces the owner
    // of `r`, who then moves along its own edges. The move works when that
    // chain can end at a free right vertex or cycle back to the freed mate.
    // Right vertex `x` leads to `y` when the owner of `x` wants `y`.
    let succ = |x: usize| owner[x].map(|b| wants[b].as_slice()).unwrap_or(&[]);
    let mut free_reach = vec![false; right];
    let mut into: Vec<Vec<usize>> = vec![Vec::new(); right];
    for x in 0..right {
        for &y in succ(x) {
            if y != x {
                into[y].push(x);
            }
        }
    }
    let mut stack: Vec<usize> = (0..right).filter(|&r| owner[r].is_none()).collect();
    for &r in &stack {
        free_reach[r] = true;
    }
    while let Some(r) = stack.pop() {
        for &x in &into[r] {
            if !free_reach[x] {
                free_reach[x] = true;
                stack.push(x);
            }
        }
    }
    let component = strongly_connected(right, succ);

    let valid = wants
        .iter()
        .enumerate()
        .map(|(a, list)| {
            list.iter()
                .copied()
                .filter(|&r| r == mate[a] || free_reach[r] || component[r] == component[mate[a]])
                .collect()
        })
        .collect();
    Some(valid)
}

/// Component label of every vertex, by Tarjan's algorithm.
fn strongly_connected<'w>(count: usize, succ: impl Fn(usize) -> &'w [usize]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; count];
    let mut low = vec![0; count];
    let mut on_stack = vec![false; count];
    let mut component = vec![UNSEEN; count];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut label = 0;
    for root in 0..count {
        if index[root] != UNSEEN {
            continue;
        }
        // Explicit call stack of (vertex, next successor position).
        let mut calls = vec![(root, 0usize)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = calls.last_mut() {
            let edges = succ(v);
            if *pos < edges.len() {
                let w = edges[*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    component[w] = label;
                    if w == v {
                        break;
                    }
                }
                label += 1;
            }
        }
    }
    component
}

/// Whether every left vertex can be matched to a distinct right vertex.
fn perfect(wants: &[Vec<usize>], right: usize) -> bool {
    if wants.len() > right {
        return false;
    }
    let mut owner: Vec<Option<usize>> = vec![None; right];
    let mut seen = vec![false; right];
    (0..wants.len()).all(|a| {
        seen.fill(false);
        augment(a, wants, &mut owner, &mut seen)
    })
}

fn augment(a: usize, wants: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &r in &wants[a] {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        if owner[r].is_none_or(|b| augment(b, wants, owner, seen)) {
            owner[r] = Some(a);
            return true;
        }
    }
    false
}

/// Solves one component by placement search, or returns `None` when the
/// component is outside the sizes the packing program handles.
pub(crate) fn solve_component(
    model: &Model,
    vehicles: &[usize],
    qos: &[f64],
    k: usize,
    frames: usize,
    pruning: bool,
    limits: &mut Limits,
) -> Option<Outcome> {
    let mut search = Search::new(model, vehicles, qos, k, frames)?;
    if search.cols.iter().zip(&search.silent).any(|(c, s)| s.is_none() && c.iter().all(Vec::is_empty)) {
        return Some(Outcome::Infeasible);
    }

    let n = vehicles.len();
    let domains: Vec<u64> =
        (0..n).map(|i| (0..frames).filter(|&l| !search.cols[i][l].is_empty()).fold(0, |m, l| m | 1 << l)).collect();
    if pruning {
        search.relax(&domains, ROOT_ITERATIONS, None, f64::NEG_INFINITY);
        if search.best.is_none() {
            let floor = search.floor - tolerance(search.floor);
            if search.relax(&domains, ROOT_ITERATIONS, Some(search.floor), floor) < floor {
                return Some(Outcome::Infeasible);
            }
        }

        // Dives guided by the relaxation supply incumbents. The first
        // runs without bounding; later ones prune against the incumbent
        // and re-tune the multipliers in between.
        for round in 0..DIVE_ROUNDS {
            let cap = limits.nodes + if round == 0 { 50 } else { 4 } * n as u64;
            let mut probe = Limits {
                deadline: limits.deadline,
                node_limit: Some(limits.node_limit.map_or(cap, |c| c.min(cap))),
                nodes: limits.nodes,
                hit: false,
            };
            search.pruning = round > 0;
            search.dive = true;
            search.found = false;
            search.dfs(&mut probe, &domains, None);
            search.pruning = true;
            search.dive = false;
            limits.nodes = probe.nodes;
            if !probe.hit && !search.found {
                // The dive exhausted the tree.
                return Some(match search.best {
                    Some((_, choice)) => Outcome::Optimal(choice),
                    None => Outcome::Infeasible,
                });
            }
            if limits.node_limit.is_some_and(|c| probe.nodes > c)
                || limits.deadline.is_some_and(|d| Instant::now() >= d)
            {
                limits.hit = true;
                return Some(Outcome::Stopped(search.best.map(|b| b.1)));
            }
            let Some((best, _)) = search.best else { break };
            search.relax(&domains, ROOT_ITERATIONS, Some(best), f64::NEG_INFINITY);
            if !search.found {
                break;
            }
        }
    } else {
        search.pruning = false;
    }

    search.dfs(limits, &domains, None);
    Some(match (limits.hit, search.best) {
        (true, best) => Outcome::Stopped(best.map(|b| b.1)),
        (false, Some((_, choice))) => Outcome::Optimal(choice),
        (false, None) => Outcome::Infeasible,
    })
}
