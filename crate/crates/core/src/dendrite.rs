//! Graph trees `(V^n, E^n)` and `(V^δ, E^δ)` built by edge replacement.
//!
//! A cell `i` with ends `a = ψ_i(0,0)` and `b = ψ_i(1,0)` is replaced by a
//! branch point `m = ψ_i(1/2,0)`, a tip `t = ψ_i(1/2,c)` and the three child
//! cells `i1 = (m, a)`, `i2 = (m, b)`, `i3 = (m, t)`. The swap in `i1` is the
//! orientation flip of `ψ_1`. Vertex identity is purely combinatorial.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::addr::{Address, CutSet};
use crate::cascade::{level_size, CascadeHandle};
use crate::error::{Error, Result};
use crate::resist::resistance_value;

/// Default depth of the resistance approximants used as edge weights.
pub const DEFAULT_GRAPH_R_DEPTH: usize = 15;
/// Default height of the tip above the branch point in the planar picture.
pub const DEFAULT_EMBED_C: f64 = 0.25;
/// Longest address the cut-set expansion will follow.
pub const MAX_EXPANSION_DEPTH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexRole {
    Boundary0,
    Boundary1,
    BranchPoint,
    BranchTip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub role: VertexRole,
    /// The cell whose refinement created this vertex; `None` for the boundary.
    pub cell: Option<Address>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendriteEdge {
    pub address: Address,
    pub end_local0: VertexId,
    pub end_local1: VertexId,
    /// `l(i) R_i`, with `R_i` truncated at the graph's `r_depth`.
    pub weight: f64,
    /// `l(i)`.
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DendriteGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<DendriteEdge>,
    pub cutset: Option<CutSet>,
    pub r_depth: usize,
    #[serde(skip)]
    index: HashMap<Address, usize>,
}

/// Compressed adjacency lists: `(neighbour, weight, edge index)`.
#[derive(Debug, Clone)]
pub struct Adjacency {
    offsets: Vec<usize>,
    entries: Vec<(u32, f64, u32)>,
}

impl Adjacency {
    pub fn neighbours(&self, v: VertexId) -> &[(u32, f64, u32)] {
        let v = v.0 as usize;
        &self.entries[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.neighbours(v).len()
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Exact distances from `src` by one traversal of the tree.
    pub fn tree_distances(&self, src: VertexId) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.vertex_count()];
        dist[src.0 as usize] = 0.0;
        let mut stack = vec![src.0];
        while let Some(v) = stack.pop() {
            let dv = dist[v as usize];
            for &(u, w, _) in self.neighbours(VertexId(v)) {
                if dist[u as usize].is_infinite() {
                    dist[u as usize] = dv + w;
                    stack.push(u);
                }
            }
        }
        dist
    }

    /// Multi-source shortest paths, settling only vertices closer than `cutoff`.
    /// Unsettled vertices are left at infinity.
    pub fn distances_within(&self, sources: &[VertexId], cutoff: f64) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.vertex_count()];
        for (v, d) in self.reached_within(sources, cutoff) {
            dist[v as usize] = d;
        }
        dist
    }

    /// Vertices at distance below `cutoff` from the sources, with their
    /// distances. Work is proportional to the ball, not the graph.
    pub fn reached_within(&self, sources: &[VertexId], cutoff: f64) -> HashMap<u32, f64> {
        #[derive(PartialEq)]
        struct Item(f64, u32);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Item {
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
            }
        }
        let mut dist: HashMap<u32, f64> = HashMap::new();
        let mut heap = BinaryHeap::new();
        for s in sources {
            dist.insert(s.0, 0.0);
            heap.push(Item(0.0, s.0));
        }
        while let Some(Item(d, v)) = heap.pop() {
            if d > dist[&v] {
                continue;
            }
            for &(u, w, _) in self.neighbours(VertexId(v)) {
                let nd = d + w;
                if nd < cutoff && dist.get(&u).is_none_or(|&old| nd < old) {
                    dist.insert(u, nd);
                    heap.push(Item(nd, u));
                }
            }
        }
        dist
    }
}

/// How edge weights are produced when a cell is split.
#[derive(Clone, Copy)]
pub(crate) enum Weigh {
    Now,
    Later,
}

impl DendriteGraph {
    /// The level-0 graph: the two boundary points joined by the root cell.
    pub fn root(handle: &CascadeHandle, r_depth: usize) -> Self {
        let mut g = Self::bare(r_depth);
        g.edges[0].weight = resistance_value(handle, &[], r_depth);
        g
    }

    fn bare(r_depth: usize) -> Self {
        let vertices = vec![
            Vertex {
                id: VertexId(0),
                role: VertexRole::Boundary0,
                cell: None,
            },
            Vertex {
                id: VertexId(1),
                role: VertexRole::Boundary1,
                cell: None,
            },
        ];
        let edges = vec![DendriteEdge {
            address: Address::root(),
            end_local0: VertexId(0),
            end_local1: VertexId(1),
            weight: f64::NAN,
            length: 1.0,
        }];
        let mut index = HashMap::new();
        index.insert(Address::root(), 0);
        DendriteGraph {
            vertices,
            edges,
            cutset: None,
            r_depth,
            index,
        }
    }

    pub fn boundary0(&self) -> VertexId {
        VertexId(0)
    }

    pub fn boundary1(&self) -> VertexId {
        VertexId(1)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, address: &Address) -> Option<&DendriteEdge> {
        self.index.get(address).map(|&k| &self.edges[k])
    }

    pub fn edge_index(&self, address: &Address) -> Option<usize> {
        self.index.get(address).copied()
    }

    fn add_vertex(&mut self, role: VertexRole, cell: &Address) -> VertexId {
        let id = VertexId(self.vertices.len() as u32);
        self.vertices.push(Vertex {
            id,
            role,
            cell: Some(cell.clone()),
        });
        id
    }

    /// Replaces edge `idx` by its three children. Child 1 takes slot `idx`;
    /// children 2 and 3 are appended. Returns the three slots.
    pub(crate) fn split(&mut self, idx: usize, handle: &CascadeHandle, weigh: Weigh) -> [usize; 3] {
        let parent = self.edges[idx].clone();
        let w = handle.sibling_triple(&parent.address);
        let m = self.add_vertex(VertexRole::BranchPoint, &parent.address);
        let t = self.add_vertex(VertexRole::BranchTip, &parent.address);
        let ends = [(m, parent.end_local0), (m, parent.end_local1), (m, t)];
        self.index.remove(&parent.address);
        let mut slots = [0usize; 3];
        for k in 0..3 {
            let address = parent.address.child(k as u8 + 1);
            let length = parent.length * w[k];
            let weight = match weigh {
                Weigh::Now => length * resistance_value(handle, address.symbols(), self.r_depth),
                Weigh::Later => f64::NAN,
            };
            let edge = DendriteEdge {
                address: address.clone(),
                end_local0: ends[k].0,
                end_local1: ends[k].1,
                weight,
                length,
            };
            let slot = if k == 0 {
                self.edges[idx] = edge;
                idx
            } else {
                self.edges.push(edge);
                self.edges.len() - 1
            };
            self.index.insert(address, slot);
            slots[k] = slot;
        }
        slots
    }

    /// Replaces the edge with the given address by its three children, with
    /// weights at the graph's resistance depth.
    pub fn refine_edge(&mut self, address: &Address, handle: &CascadeHandle) -> Result<[usize; 3]> {
        let idx = self
            .edge_index(address)
            .ok_or_else(|| Error::NotFound(format!("edge {address} is not in the graph")))?;
        Ok(self.split(idx, handle, Weigh::Now))
    }

    /// Computes every edge weight `l(i) R_i` at the graph's resistance depth.
    pub(crate) fn assign_weights(&mut self, handle: &CascadeHandle) {
        let depth = self.r_depth;
        for e in &mut self.edges {
            e.weight = e.length * resistance_value(handle, e.address.symbols(), depth);
        }
    }

    pub fn adjacency(&self) -> Adjacency {
        let nv = self.vertices.len();
        let mut degree = vec![0usize; nv + 1];
        for e in &self.edges {
            degree[e.end_local0.0 as usize] += 1;
            degree[e.end_local1.0 as usize] += 1;
        }
        let mut offsets = vec![0usize; nv + 1];
        for v in 0..nv {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut entries = vec![(0u32, 0.0f64, 0u32); offsets[nv]];
        for (k, e) in self.edges.iter().enumerate() {
            let (a, b) = (e.end_local0.0, e.end_local1.0);
            entries[fill[a as usize]] = (b, e.weight, k as u32);
            fill[a as usize] += 1;
            entries[fill[b as usize]] = (a, e.weight, k as u32);
            fill[b as usize] += 1;
        }
        Adjacency { offsets, entries }
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if (v.0 as usize) < self.vertices.len() {
            Ok(())
        } else {
            Err(Error::NotFound(format!("vertex {} is not in the graph", v.0)))
        }
    }

    /// Series-law resistance: the sum of weights on the tree path.
    pub fn path_resistance(&self, x: VertexId, y: VertexId) -> Result<f64> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        if x == y {
            return Ok(0.0);
        }
        // Sum from the smaller id so that the result is exactly symmetric.
        let (a, b) = if x.0 < y.0 { (x, y) } else { (y, x) };
        Ok(self.adjacency().tree_distances(a)[b.0 as usize])
    }

    /// Weighted diameter by double sweep.
    pub fn graph_diameter(&self) -> (f64, (VertexId, VertexId)) {
        let adj = self.adjacency();
        let farthest = |d: &[f64]| {
            let mut best = 0usize;
            for (k, v) in d.iter().enumerate() {
                if *v > d[best] {
                    best = k;
                }
            }
            best
        };
        let u = farthest(&adj.tree_distances(self.boundary0()));
        let du = adj.tree_distances(VertexId(u as u32));
        let v = farthest(&du);
        (du[v], (VertexId(u as u32), VertexId(v as u32)))
    }

    /// Checks the tree structure: `|E| = |V| - 1`, connectivity, degrees at
    /// most 3, distinct ends and positive weights.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::validation("graph", m));
        if self.edges.len() + 1 != self.vertices.len() {
            return bad(format!("{} edges for {} vertices", self.edges.len(), self.vertices.len()));
        }
        for e in &self.edges {
            if e.end_local0 == e.end_local1 {
                return bad(format!("edge {} is a loop", e.address));
            }
            if !(e.weight > 0.0) {
                return bad(format!("edge {} has weight {}", e.address, e.weight));
            }
        }
        let adj = self.adjacency();
        if adj.tree_distances(self.boundary0()).iter().any(|d| d.is_infinite()) {
            return bad("graph is disconnected".into());
        }
        for v in &self.vertices {
            if adj.degree(v.id) > 3 {
                return bad(format!("vertex {} has degree {}", v.id.0, adj.degree(v.id)));
            }
        }
        Ok(())
    }

    /// Planar coordinates of every vertex, indexed by vertex id.
    pub fn embed(&self, c: f64) -> Result<Vec<(f64, f64)>> {
        if !(c > 0.0 && c < 0.5) {
            return Err(Error::Domain(format!("embedding constant must lie in (0, 1/2), got {c}")));
        }
        Ok(self
            .vertices
            .iter()
            .map(|v| match (v.role, &v.cell) {
                (VertexRole::Boundary0, _) => (0.0, 0.0),
                (VertexRole::Boundary1, _) => (1.0, 0.0),
                (VertexRole::BranchPoint, Some(cell)) => apply_word(cell, (0.5, 0.0), c),
                (VertexRole::BranchTip, Some(cell)) => apply_word(cell, (0.5, c), c),
                _ => unreachable!("interior vertices record their cell"),
            })
            .collect())
    }

    /// The edges below `prefix`, renumbered into a graph of their own.
    pub fn cell_subgraph(&self, prefix: &Address) -> DendriteGraph {
        let mut remap: BTreeMap<VertexId, VertexId> = BTreeMap::new();
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        let mut index = HashMap::new();
        let mut map = |v: VertexId, vertices: &mut Vec<Vertex>| {
            *remap.entry(v).or_insert_with(|| {
                let id = VertexId(vertices.len() as u32);
                let mut vx = self.vertices[v.0 as usize].clone();
                vx.id = id;
                vertices.push(vx);
                id
            })
        };
        for e in self.edges.iter().filter(|e| prefix.is_prefix_of(&e.address)) {
            let mut e = e.clone();
            e.end_local0 = map(e.end_local0, &mut vertices);
            e.end_local1 = map(e.end_local1, &mut vertices);
            index.insert(e.address.clone(), edges.len());
            edges.push(e);
        }
        DendriteGraph {
            vertices,
            edges,
            cutset: None,
            r_depth: self.r_depth,
            index,
        }
    }

    /// SVG drawing; stroke width and colour follow `log weight`.
    pub fn render_svg(&self, c: f64, size: f64) -> Result<String> {
        let pos = self.embed(c)?;
        let logs: Vec<f64> = self.edges.iter().map(|e| e.weight.max(f64::MIN_POSITIVE).ln()).collect();
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let margin = 0.05 * size;
        let scale = size - 2.0 * margin;
        let (ymin, ymax) = pos
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
        let height = (ymax - ymin).max(0.1) * scale + 2.0 * margin;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0}" height="{height:.0}" viewBox="0 0 {size:.0} {height:.0}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for (e, lw) in self.edges.iter().zip(&logs) {
            let t = (lw - lo) / span;
            let width = 0.3 + 2.7 * t;
            // Small edges blue, large edges red.
            let red = (255.0 * t).round() as u8;
            let blue = (255.0 * (1.0 - t)).round() as u8;
            let p = pos[e.end_local0.0 as usize];
            let q = pos[e.end_local1.0 as usize];
            let tx = |x: f64| margin + x * scale;
            let ty = |y: f64| margin + (ymax - y) * scale;
            let _ = writeln!(
                out,
                r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="rgb({red},40,{blue})" stroke-width="{width:.3}" stroke-linecap="round"/>"#,
                tx(p.0),
                ty(p.1),
                tx(q.0),
                ty(q.1)
            );
        }
        out.push_str("</svg>\n");
        Ok(out)
    }

    /// Rebuilds the address index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| (e.address.clone(), k))
            .collect();
    }
}

/// `ψ_{i_1} ∘ .. ∘ ψ_{i_n}` applied to `p`.
pub fn apply_word(word: &Address, p: (f64, f64), c: f64) -> (f64, f64) {
    word.symbols().iter().rev().fold(p, |(x, y), &k| psi(k, (x, y), c))
}

pub fn psi(k: u8, (x, y): (f64, f64), c: f64) -> (f64, f64) {
    match k {
        1 => (0.5 * (1.0 - x), 0.5 * y),
        2 => (0.5 * (1.0 + x), -0.5 * y),
        3 => (0.5 + c * y, c * x),
        _ => panic!("symbol {k} outside 1..=3"),
    }
}

/// `(V^n, E^n)`: every cell of `Σ_n`.
pub fn build_level(handle: &CascadeHandle, n: usize, r_depth: usize) -> Result<DendriteGraph> {
    let size = level_size(3, n);
    handle.budget.check_nodes("level graph", size)?;
    if size > handle.budget.max_edges {
        return Err(Error::Budget {
            what: "level graph edges",
            needed: size,
            limit: handle.budget.max_edges,
        });
    }
    let mut g = DendriteGraph::bare(r_depth);
    for _ in 0..n {
        for idx in 0..g.edges.len() {
            g.split(idx, handle, Weigh::Later);
        }
    }
    g.assign_weights(handle);
    Ok(g)
}

/// `|Σ_δ|` for every `δ` in `deltas`, from one traversal and without graphs.
pub fn cutset_sizes(handle: &CascadeHandle, deltas: &[f64]) -> Result<Vec<u64>> {
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {d}")));
    }
    // Descending order, so the deltas a cell can belong to form a contiguous run.
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[b].total_cmp(&deltas[a]));
    let sorted: Vec<f64> = order.iter().map(|&k| deltas[k]).collect();
    let mut walk = SizeWalk {
        handle,
        deltas: &sorted,
        counts: vec![0; sorted.len()],
        visited: 0,
        path: Vec::new(),
    };
    walk.visit(1.0, 0)?;
    let mut out = vec![0u64; deltas.len()];
    for (k, &i) in order.iter().enumerate() {
        out[i] = walk.counts[k];
    }
    Ok(out)
}

struct SizeWalk<'a> {
    handle: &'a CascadeHandle,
    deltas: &'a [f64],
    counts: Vec<u64>,
    visited: u64,
    path: Vec<u8>,
}

impl SizeWalk<'_> {
    /// `first` is the index of the largest delta below `l`.
    fn visit(&mut self, l: f64, first: usize) -> Result<()> {
        self.visited += 1;
        if self.visited > self.handle.budget.max_nodes {
            return Err(Error::Budget {
                what: "cut-set traversal",
                needed: self.visited,
                limit: self.handle.budget.max_nodes,
            });
        }
        if self.path.len() >= MAX_EXPANSION_DEPTH {
            return Err(Error::Nontermination {
                edges: self.visited as usize,
                pending: 0,
                depth: self.path.len(),
            });
        }
        let w = self.handle.triple_at(&self.path);
        for (k, wk) in w.iter().enumerate() {
            let lc = l * wk;
            let mut j = first;
            while j < self.deltas.len() && self.deltas[j] >= lc {
                self.counts[j] += 1;
                j += 1;
            }
            if j < self.deltas.len() {
                self.path.push(k as u8 + 1);
                self.visit(lc, j)?;
                self.path.pop();
            }
        }
        Ok(())
    }
}

/// `(V^δ, E^δ)`: cells are split until `l(i) <= δ`.
pub fn build_cutset_graph(handle: &CascadeHandle, delta: f64, r_depth: usize) -> Result<DendriteGraph> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let mut g = DendriteGraph::bare(r_depth);
    let mut parent_lengths = BTreeMap::new();
    let mut stack = vec![0usize];
    let cap = handle.budget.max_edges as usize;
    let mut deepest = 0usize;
    while let Some(idx) = stack.pop() {
        let e = &g.edges[idx];
        if e.length <= delta {
            continue;
        }
        deepest = deepest.max(e.address.len() + 1);
        if g.edges.len() + 2 > cap || e.address.len() >= MAX_EXPANSION_DEPTH {
            let pending = stack.len() + 1;
            return Err(Error::Nontermination {
                edges: g.edges.len(),
                pending,
                depth: deepest,
            });
        }
        let parent_len = e.length;
        let slots = g.split(idx, handle, Weigh::Later);
        for s in slots {
            parent_lengths.insert(g.edges[s].address.clone(), parent_len);
            stack.push(s);
        }
    }
    // Only the final cells belong to the cut-set.
    let members: BTreeMap<Address, f64> = g
        .edges
        .iter()
        .map(|e| (e.address.clone(), parent_lengths[&e.address]))
        .collect();
    g.cutset = Some(CutSet {
        delta,
        parent_lengths: members,
    });
    g.assign_weights(handle);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::ScalingLaw;

    fn halves() -> CascadeHandle {
        CascadeHandle::new(1, ScalingLaw::halves())
    }

    #[test]
    fn one_refinement() {
        let h = halves();
        let mut g = DendriteGraph::root(&h, 4);
        g.refine_edge(&Address::root(), &h).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (4, 3));
        let e1 = g.edge(&"1".parse().unwrap()).unwrap();
        let e2 = g.edge(&"2".parse().unwrap()).unwrap();
        let e3 = g.edge(&"3".parse().unwrap()).unwrap();
        assert_eq!(e1.end_local1, g.boundary0());
        assert_eq!(e2.end_local1, g.boundary1());
        assert_eq!(e1.end_local0, e3.end_local0);
        assert_eq!(g.vertices[e3.end_local1.0 as usize].role, VertexRole::BranchTip);
        assert!(g.edges.iter().all(|e| e.weight == 0.5));
        assert!(matches!(g.refine_edge(&Address::root(), &h), Err(Error::NotFound(_))));
    }

    #[test]
    fn level_counts_and_boundary_leaves() {
        let h = CascadeHandle::new(3, ScalingLaw::uniform());
        for n in 0..=5 {
            let g = build_level(&h, n, 3).unwrap();
            assert_eq!(g.edge_count(), 3usize.pow(n as u32));
            assert_eq!(g.vertex_count(), g.edge_count() + 1);
            g.validate().unwrap();
            let adj = g.adjacency();
            assert_eq!(adj.degree(g.boundary0()), 1);
            assert_eq!(adj.degree(g.boundary1()), 1);
            assert!(g.edges.iter().all(|e| e.address.len() == n));
        }
    }

    #[test]
    fn cutset_examples() {
        let h = halves();
        let g = build_cutset_graph(&h, 0.3, 2).unwrap();
        let cs = g.cutset.as_ref().unwrap();
        assert_eq!(cs.len(), 9);
        assert!(cs.members().all(|a| a.len() == 2));
        let g = build_cutset_graph(&h, 0.5, 2).unwrap();
        assert_eq!(g.cutset.as_ref().unwrap().len(), 3);
        assert!(build_cutset_graph(&h, 1.0, 2).is_err());
    }

    #[test]
    fn nontermination_is_reported() {
        let h = CascadeHandle::new(1, ScalingLaw::uniform()).with_budget(crate::cascade::Budget {
            max_nodes: 1000,
            max_edges: 50,
        });
        assert!(matches!(
            build_cutset_graph(&h, 1e-6, 2),
            Err(Error::Nontermination { .. })
        ));
    }

    #[test]
    fn deterministic_distances() {
        let h = halves();
        for n in 0..=5 {
            let g = build_level(&h, n, 3).unwrap();
            let d = g.path_resistance(g.boundary0(), g.boundary1()).unwrap();
            assert!((d - 1.0).abs() < 1e-12);
            assert!((g.graph_diameter().0 - 1.0).abs() < 1e-12);
        }
        let g = build_level(&h, 1, 3).unwrap();
        let tip = g.vertices.iter().find(|v| v.role == VertexRole::BranchTip).unwrap().id;
        assert!((g.path_resistance(g.boundary0(), tip).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(g.path_resistance(tip, tip).unwrap(), 0.0);
        assert!(g.path_resistance(tip, VertexId(99)).is_err());
    }

    #[test]
    fn embedding() {
        let h = halves();
        let g = build_level(&h, 1, 0).unwrap();
        let pos = g.embed(0.25).unwrap();
        assert_eq!(pos[0], (0.0, 0.0));
        assert_eq!(pos[1], (1.0, 0.0));
        assert_eq!(pos[2], (0.5, 0.0));
        assert_eq!(pos[3], (0.5, 0.25));
        assert_eq!(psi(1, (1.0, 0.0), 0.25), (0.0, 0.0));
        assert!(g.embed(0.5).is_err());
        // Every edge's ends sit where the cell's maps send (0,0) and (1,0).
        let g = build_level(&h, 3, 0).unwrap();
        let pos = g.embed(0.2).unwrap();
        for e in &g.edges {
            let p0 = apply_word(&e.address, (0.0, 0.0), 0.2);
            let p1 = apply_word(&e.address, (1.0, 0.0), 0.2);
            let q0 = pos[e.end_local0.0 as usize];
            let q1 = pos[e.end_local1.0 as usize];
            assert!((p0.0 - q0.0).abs() < 1e-12 && (p0.1 - q0.1).abs() < 1e-12);
            assert!((p1.0 - q1.0).abs() < 1e-12 && (p1.1 - q1.1).abs() < 1e-12);
        }
    }

    #[test]
    fn svg_has_one_line_per_edge() {
        let h = CascadeHandle::new(2, ScalingLaw::uniform());
        let g = build_level(&h, 2, 3).unwrap();
        let svg = g.render_svg(DEFAULT_EMBED_C, 400.0).unwrap();
        assert_eq!(svg.matches("<line").count(), 9);
    }

    #[test]
    fn cutset_sizes_match_graphs() {
        let h = CascadeHandle::new(8, ScalingLaw::uniform());
        let deltas = [0.3, 0.1, 0.05];
        let sizes = cutset_sizes(&h, &deltas).unwrap();
        for (d, n) in deltas.iter().zip(sizes) {
            assert_eq!(build_cutset_graph(&h, *d, 2).unwrap().edge_count() as u64, n);
        }
    }
}
