//! Open cells, cluster exploration and neighbourhood counts on `(V^δ, E^δ)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::addr::Address;
use crate::cascade::{check_condition_c, epsilon_grid, CascadeHandle};
use crate::dendrite::{DendriteGraph, VertexId};
use crate::error::{Error, Result};
use crate::law::ScalingLaw;
use crate::resist::resistance_value;
use crate::rng::{Namespace, NodeStream};

/// Upper limit `3^3 / 4^4` on the percolation parameter `p`.
pub const P_LIMIT: f64 = 27.0 / 256.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenMarking {
    pub delta: f64,
    pub epsilon0: f64,
    pub open_set: BTreeSet<Address>,
}

/// Marks the cut-set cells with `l(i) R_i <= ε₀ δ` as open.
pub fn mark_open(graph: &DendriteGraph, epsilon0: f64) -> Result<OpenMarking> {
    let cutset = graph
        .cutset
        .as_ref()
        .ok_or_else(|| Error::Precondition("open cells are defined on cut-set graphs only".into()))?;
    let threshold = epsilon0 * cutset.delta;
    let open_set = graph
        .edges
        .iter()
        .filter(|e| e.weight <= threshold)
        .map(|e| e.address.clone())
        .collect();
    Ok(OpenMarking {
        delta: cutset.delta,
        epsilon0,
        open_set,
    })
}

/// The cell graph `Γ_δ`: cells sorted by address, with the cells they share
/// a vertex with.
#[derive(Debug, Clone)]
pub struct CellGraph {
    pub addresses: Vec<Address>,
    pub open: Vec<bool>,
    pub neighbours: Vec<Vec<u32>>,
    rank: BTreeMap<Address, u32>,
}

impl CellGraph {
    pub fn new(graph: &DendriteGraph, marking: &OpenMarking) -> Self {
        let mut order: Vec<usize> = (0..graph.edge_count()).collect();
        order.sort_by(|&a, &b| graph.edges[a].address.cmp(&graph.edges[b].address));
        let mut rank_of_edge = vec![0u32; graph.edge_count()];
        for (r, &e) in order.iter().enumerate() {
            rank_of_edge[e] = r as u32;
        }
        let addresses: Vec<Address> = order.iter().map(|&e| graph.edges[e].address.clone()).collect();
        let open: Vec<bool> = addresses.iter().map(|a| marking.open_set.contains(a)).collect();
        let mut incident: Vec<Vec<u32>> = vec![Vec::new(); graph.vertex_count()];
        for (k, e) in graph.edges.iter().enumerate() {
            incident[e.end_local0.0 as usize].push(rank_of_edge[k]);
            incident[e.end_local1.0 as usize].push(rank_of_edge[k]);
        }
        let mut neighbours: Vec<Vec<u32>> = vec![Vec::new(); addresses.len()];
        for cells in &incident {
            for &a in cells {
                for &b in cells {
                    if a != b {
                        neighbours[a as usize].push(b);
                    }
                }
            }
        }
        for n in &mut neighbours {
            n.sort_unstable();
            n.dedup();
        }
        let rank = addresses.iter().enumerate().map(|(k, a)| (a.clone(), k as u32)).collect();
        CellGraph {
            addresses,
            open,
            neighbours,
            rank,
        }
    }

    pub fn rank(&self, a: &Address) -> Option<u32> {
        self.rank.get(a).copied()
    }

    /// Number of open cells sharing a vertex with open cell `k` (0 if `k` is closed).
    pub fn open_degree(&self, k: u32) -> usize {
        if !self.open[k as usize] {
            return 0;
        }
        self.neighbours[k as usize].iter().filter(|&&j| self.open[j as usize]).count()
    }

    /// The `L_n / D_n` exploration from cell `start`, always taking the
    /// smallest address in `L_n`. Returns the sorted cluster, `τ`, and the
    /// sizes `|D_n|` for `n = 0..=τ`.
    pub fn explore(&self, start: u32) -> (Vec<u32>, usize, Vec<usize>) {
        let mut live: BTreeSet<u32> = BTreeSet::from([start]);
        let mut dead: Vec<u32> = Vec::new();
        let mut seen: BTreeSet<u32> = BTreeSet::from([start]);
        let mut trace = vec![0usize];
        while let Some(j) = live.pop_first() {
            dead.push(j);
            if self.open[j as usize] {
                for &k in &self.neighbours[j as usize] {
                    if self.open[k as usize] && seen.insert(k) {
                        live.insert(k);
                    }
                }
            }
            trace.push(dead.len());
        }
        let tau = dead.len();
        dead.sort_unstable();
        (dead, tau, trace)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exploration {
    pub cluster: BTreeSet<Address>,
    pub tau: usize,
    /// `|D_n|` for `n = 0..=τ`.
    pub dead_sizes: Vec<usize>,
}

/// `C(i)` by the exploration algorithm.
pub fn explore_cluster(graph: &DendriteGraph, marking: &OpenMarking, i: &Address) -> Result<Exploration> {
    let cells = CellGraph::new(graph, marking);
    explore_in(&cells, i)
}

pub fn explore_in(cells: &CellGraph, i: &Address) -> Result<Exploration> {
    let start = cells
        .rank(i)
        .ok_or_else(|| Error::NotFound(format!("cell {i} is not in the cut-set")))?;
    let (members, tau, dead_sizes) = cells.explore(start);
    Ok(Exploration {
        cluster: members.iter().map(|&k| cells.addresses[k as usize].clone()).collect(),
        tau,
        dead_sizes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// `(smallest address, size)` of every cluster, closed cells included.
    pub clusters: Vec<(Address, usize)>,
    /// `C_δ`.
    pub largest: usize,
    pub tau_histogram: BTreeMap<usize, usize>,
    pub open_count: usize,
    pub cell_count: usize,
}

pub fn largest_cluster(graph: &DendriteGraph, marking: &OpenMarking) -> ClusterReport {
    cluster_report(&CellGraph::new(graph, marking))
}

pub fn cluster_report(cells: &CellGraph) -> ClusterReport {
    let n = cells.addresses.len();
    let mut done = vec![false; n];
    let mut clusters = Vec::new();
    let mut hist = BTreeMap::new();
    for k in 0..n as u32 {
        if done[k as usize] {
            continue;
        }
        let (members, tau, _) = cells.explore(k);
        for &m in &members {
            done[m as usize] = true;
        }
        clusters.push((cells.addresses[members[0] as usize].clone(), members.len()));
        *hist.entry(tau).or_insert(0) += 1;
    }
    let largest = clusters.iter().map(|c| c.1).max().unwrap_or(0);
    ClusterReport {
        clusters,
        largest,
        tau_histogram: hist,
        open_count: cells.open.iter().filter(|&&o| o).count(),
        cell_count: n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epsilon0 {
    pub epsilon0: f64,
    pub p: f64,
    /// Largest empirical `P(w R <= ε₀ x | w <= x)` over the grid.
    pub worst_frequency: f64,
    pub samples: usize,
    pub r_depth: usize,
}

/// Largest grid `ε₀` with empirical `P(w R <= ε₀ x | w <= x) <= p` at every grid `x`.
pub fn epsilon0_search(
    law: &ScalingLaw,
    p: f64,
    x_grid: &[f64],
    mc_samples: usize,
    r_depth: usize,
    seed: u64,
) -> Result<Epsilon0> {
    if !(p > 0.0 && p < P_LIMIT) {
        return Err(Error::Domain(format!("p must lie in (0, 27/256), got {p}")));
    }
    if law.is_degenerate() || !law.independent_coordinates() {
        return Err(Error::Unsupported(format!(
            "epsilon0 needs independent, non-degenerate coordinates; {} is not",
            law.name()
        )));
    }
    let c = check_condition_c(law, p, x_grid)?;
    if !c.holds {
        return Err(Error::Condition(format!(
            "lower-tail condition fails for {} at p = {p}",
            law.name()
        )));
    }
    if mc_samples == 0 {
        return Err(Error::validation("mc_samples", "need at least one sample"));
    }
    // R is a function of the descendants only, hence independent of w.
    let rs: Vec<f64> = (0..mc_samples as u64)
        .map(|k| {
            let h = CascadeHandle::new(seed ^ 0x7e57_0000_0000_0000 ^ k.rotate_left(17), law.clone());
            resistance_value(&h, &[], r_depth)
        })
        .collect();
    let mut ratios: Vec<Vec<f64>> = Vec::new();
    for (xi, &x) in x_grid.iter().enumerate() {
        let mut rng = NodeStream::labelled(seed, Namespace::MonteCarlo, xi as u64);
        let mut v = Vec::with_capacity(mc_samples);
        for r in &rs {
            match law.sample_coordinate_below(0, x, &mut rng) {
                Some(w) => v.push(w * r / x),
                None => break,
            }
        }
        if !v.is_empty() {
            ratios.push(v);
        }
    }
    let freq = |eps: f64| {
        ratios
            .iter()
            .map(|v| v.iter().filter(|&&q| q <= eps).count() as f64 / v.len() as f64)
            .fold(0.0, f64::max)
    };
    for eps in epsilon_grid() {
        let f = freq(eps);
        if f <= p {
            return Ok(Epsilon0 {
                epsilon0: eps,
                p,
                worst_frequency: f,
                samples: mc_samples,
                r_depth,
            });
        }
    }
    Err(Error::Statistical(format!(
        "no grid epsilon0 keeps the conditional frequency below {p}; at the smallest grid value it is {}",
        freq(*epsilon_grid().last().expect("grid"))
    )))
}

/// `N_{δ,ε}(x)`: cells of `Σ_δ` at distance `< δ ε` from the union of the
/// cells containing `x`, distances taken between their end vertices.
pub fn neighborhood_count(graph: &DendriteGraph, x: VertexId, epsilon: f64) -> Result<usize> {
    let delta = graph
        .cutset
        .as_ref()
        .map(|c| c.delta)
        .ok_or_else(|| Error::Precondition("neighbourhood counts need a cut-set graph".into()))?;
    let adj = graph.adjacency();
    neighborhood_count_with(graph, &adj, x, delta * epsilon)
}

/// As [`neighborhood_count`] with an explicit radius `δ ε`.
pub fn neighborhood_count_with(
    graph: &DendriteGraph,
    adj: &crate::dendrite::Adjacency,
    x: VertexId,
    radius: f64,
) -> Result<usize> {
    if (x.0 as usize) >= graph.vertex_count() {
        return Err(Error::NotFound(format!("vertex {} is not in the graph", x.0)));
    }
    let mut sources = vec![x];
    for &(u, _, _) in adj.neighbours(x) {
        sources.push(VertexId(u));
    }
    if radius <= 0.0 {
        return Ok(0);
    }
    let reached = adj.reached_within(&sources, radius);
    let cells: std::collections::HashSet<u32> = reached
        .keys()
        .flat_map(|&v| adj.neighbours(VertexId(v)).iter().map(|&(_, _, e)| e))
        .collect();
    Ok(cells.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dendrite::{build_cutset_graph, build_level};

    #[test]
    fn deterministic_marking() {
        let h = CascadeHandle::new(0, ScalingLaw::halves());
        let g = build_cutset_graph(&h, 0.2, 4).unwrap();
        assert!(mark_open(&g, 0.49).unwrap().open_set.is_empty());
        assert_eq!(mark_open(&g, 1.0).unwrap().open_set.len(), g.edge_count());
        let level = build_level(&h, 2, 4).unwrap();
        assert!(matches!(mark_open(&level, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn closed_cell_is_alone() {
        let h = CascadeHandle::new(0, ScalingLaw::halves());
        let g = build_cutset_graph(&h, 0.2, 4).unwrap();
        let m = mark_open(&g, 0.1).unwrap();
        let e = explore_cluster(&g, &m, &"1.2.3".parse().unwrap()).unwrap();
        assert_eq!(e.tau, 1);
        assert_eq!(e.cluster.len(), 1);
        assert!(explore_cluster(&g, &m, &"1".parse().unwrap()).is_err());
    }

    #[test]
    fn all_open_level_two_is_one_cluster() {
        let h = CascadeHandle::new(0, ScalingLaw::halves());
        let g = build_cutset_graph(&h, 0.3, 4).unwrap();
        let m = mark_open(&g, 1.0).unwrap();
        let rep = largest_cluster(&g, &m);
        assert_eq!(rep.largest, 9);
        let closed = mark_open(&g, 0.1).unwrap();
        assert_eq!(largest_cluster(&g, &closed).largest, 1);
    }

    #[test]
    fn p_range_and_degenerate_laws() {
        let grid = crate::cascade::default_x_grid();
        assert!(matches!(
            epsilon0_search(&ScalingLaw::uniform(), P_LIMIT, &grid, 10, 4, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            epsilon0_search(&ScalingLaw::halves(), 0.05, &grid, 10, 4, 0),
            Err(Error::Unsupported(_))
        ));
    }
}
