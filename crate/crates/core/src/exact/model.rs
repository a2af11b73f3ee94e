//! Column model of the exact problem.
//!
//! Under the time-dispersion constraint a vehicle's row of `x` is either
//! empty or a nonempty subset of a single subframe, and the QoS window
//! discards every subset whose rate falls outside it. Each surviving
//! (subframe, subset) choice is a column.
//!
//! Conflicts are expressed as unit-capacity resources that columns consume:
//!
//! * `(cluster j, subframe l)` for every cluster containing the vehicle:
//!   at most one member of a cluster per subframe is exactly the pairwise
//!   half-duplex constraint.
//! * `(clique C, subchannel k)` for cliques of the conflict graph (intra
//!   or one-hop pairs) that cover every one-hop pair: any two members of
//!   `C` either avoid each other's subframes or each other's subchannels,
//!   so at most one of them can use `k`.

use crate::channel::CapacityMap;
use crate::constraints::qos_bounds;
use crate::scenario::{ChannelGrid, Scenario, VehicleId};

/// Marks the column of a vehicle that stays silent.
pub(crate) const SILENT: usize = usize::MAX;

#[derive(Debug, Clone)]
pub(crate) struct Column {
    pub subframe: usize,
    /// Bit `b` selects subchannel `subframe * K + b`.
    pub mask: u8,
    pub rate: f64,
    pub resources: Vec<u32>,
}

impl Column {
    pub fn subchannels(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..k).filter(move |b| self.mask >> b & 1 == 1).map(move |b| self.subframe * k + b)
    }
}

#[derive(Debug)]
pub(crate) struct Model {
    pub columns: Vec<Vec<Column>>,
    /// Vehicle adjacency through intra-cluster or one-hop pairs.
    pub neighbours: Vec<Vec<usize>>,
    /// Resources touched by each vehicle's columns.
    pub vehicle_resources: Vec<Vec<u32>>,
    /// Members of every cluster with at least two vehicles, as indices.
    pub clusters: Vec<Vec<usize>>,
    /// Cliques carrying subchannel resources, as sorted indices.
    pub cliques: Vec<Vec<usize>>,
}

impl Model {
    pub fn build(s: &Scenario, g: &ChannelGrid, c: &CapacityMap) -> Self {
        let n = s.vehicle_count();
        let k = g.subchannels_per_subframe();
        let l_count = g.subframes();
        let clusters = s.clusters();

        let mut next = 0u32;
        let mut alloc = |count: usize| {
            let base = next;
            next += count as u32;
            base
        };

        // (cluster, subframe) resources; singleton clusters cannot conflict.
        let cluster_base: Vec<Option<u32>> =
            clusters.iter().map(|cl| (cl.len() > 1).then(|| alloc(l_count))).collect();

        // Pairs of intersecting clusters that both have members outside
        // the other, i.e. that produce one-hop pairs.
        let mut groups = Vec::new();
        for j in 0..clusters.len() {
            for jp in j + 1..clusters.len() {
                let (a, b) = (&clusters[j], &clusters[jp]);
                if !a.iter().any(|v| b.binary_search(v).is_ok()) {
                    continue;
                }
                let only_a = a.iter().any(|v| b.binary_search(v).is_err());
                let only_b = b.iter().any(|v| a.binary_search(v).is_err());
                if only_a && only_b {
                    groups.push((j, jp));
                }
            }
        }

        // Conflict graph: intra-cluster pairs plus one-hop pairs.
        let mut neighbours = vec![Vec::new(); n];
        for cl in clusters {
            for a in cl {
                neighbours[a.index()].extend(cl.iter().filter(|b| *b != a).map(|b| b.index()));
            }
        }
        let mut seeds = Vec::new();
        for (j, jp) in groups {
            let (a, b) = (&clusters[j], &clusters[jp]);
            let only_a: Vec<usize> = a.iter().filter(|v| b.binary_search(v).is_err()).map(|v| v.index()).collect();
            let only_b: Vec<usize> = b.iter().filter(|v| a.binary_search(v).is_err()).map(|v| v.index()).collect();
            for &y in &only_a {
                for &z in &only_b {
                    neighbours[y].push(z);
                    neighbours[z].push(y);
                }
            }
            seeds.push([only_a, only_b].concat());
        }
        for list in &mut neighbours {
            list.sort_unstable();
            list.dedup();
        }

        // Each hop group is a clique of the conflict graph; grow it to a
        // maximal one. At most one clique member can use any subchannel.
        let mut cliques: Vec<Vec<usize>> = Vec::new();
        for mut clique in seeds {
            for (v, adjacent) in neighbours.iter().enumerate() {
                if !clique.contains(&v) && clique.iter().all(|&u| adjacent.binary_search(&u).is_ok()) {
                    clique.push(v);
                }
            }
            clique.sort_unstable();
            if !cliques.contains(&clique) {
                cliques.push(clique);
            }
        }
        let clique_base: Vec<u32> = cliques.iter().map(|_| alloc(g.total_subchannels())).collect();

        let mut columns = Vec::with_capacity(n);
        let mut vehicle_resources = Vec::with_capacity(n);
        for i in 0..n {
            let v = VehicleId::from_index(i);
            let frame_res: Vec<u32> = s.clusters_of(v).into_iter().filter_map(|j| cluster_base[j]).collect();
            let channel_res: Vec<u32> = cliques
                .iter()
                .zip(&clique_base)
                .filter(|(cl, _)| cl.binary_search(&i).is_ok())
                .map(|(_, &base)| base)
                .collect();

            let (lo, hi) = qos_bounds(s.qos(v), s.epsilon_bps());
            let mut cols = Vec::new();
            if lo <= 0.0 {
                cols.push(Column { subframe: SILENT, mask: 0, rate: 0.0, resources: Vec::new() });
            }
            for l in 0..l_count {
                for mask in 1u8..(1u16 << k) as u8 {
                    let rate: f64 = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| c.rate(v, l * k + b)).sum();
                    if rate < lo || rate > hi {
                        continue;
                    }
                    let mut resources: Vec<u32> = frame_res.iter().map(|&base| base + l as u32).collect();
                    for &base in &channel_res {
                        resources.extend((0..k).filter(|b| mask >> b & 1 == 1).map(|b| base + (l * k + b) as u32));
                    }
                    cols.push(Column { subframe: l, mask, rate, resources });
                }
            }
            let mut touched: Vec<u32> = cols.iter().flat_map(|c| c.resources.iter().copied()).collect();
            touched.sort_unstable();
            touched.dedup();
            vehicle_resources.push(touched);
            columns.push(cols);
        }

        let clusters = clusters.iter().filter(|c| c.len() > 1).map(|c| c.iter().map(|v| v.index()).collect()).collect();
        Self { columns, neighbours, vehicle_resources, clusters, cliques }
    }

    /// Connected components of the conflict graph, each sorted by vehicle
    /// index, ordered by their smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.columns.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut stack = vec![root];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &self.neighbours[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}
