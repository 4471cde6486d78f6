//! The self-similar measure on cells, point sampling, ball-mass bounds and
//! the two dimension estimators.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::addr::{is_prefix_free, Address};
use crate::cascade::{check_condition_a, check_condition_c, default_x_grid, level_size, solve_alpha, CascadeHandle, DEFAULT_ALPHA_TOL};
use crate::dendrite::{DendriteGraph, VertexId, Weigh};
use crate::error::{Error, Result};
use crate::law::ScalingLaw;
use crate::resist::resistance_value;
use crate::rng::{Namespace, NodeStream};
use crate::stats::{fit_line, jackknife, mean_stderr, std_dev};

/// Default cap `Ŵ` on normalised cell diameters in the lower ball bound.
pub const DEFAULT_W_CAP: f64 = 4.0;
/// Default ratio `r / δ` between a radius and the resolution used for it.
pub const DEFAULT_DELTA_RATIO: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureAssignment {
    pub leaf_level: usize,
    pub masses: BTreeMap<Address, f64>,
    pub total: f64,
}

impl MeasureAssignment {
    pub fn mass(&self, i: &Address) -> Option<f64> {
        self.masses.get(i).copied()
    }
}

/// Common-leaf masses `Σ_{k ∈ Σ_L, i ≤ k} l(k)^α / Σ_{k ∈ Σ_L} l(k)^α`.
pub fn cell_masses(
    handle: &CascadeHandle,
    family: &[Address],
    leaf_level: usize,
    alpha: f64,
) -> Result<MeasureAssignment> {
    if !is_prefix_free(family) {
        return Err(Error::Domain("cell family is not prefix-free".into()));
    }
    if let Some(long) = family.iter().find(|a| a.len() > leaf_level) {
        return Err(Error::Domain(format!(
            "cell {long} is deeper than the leaf level {leaf_level}"
        )));
    }
    handle.budget.check_nodes("common-leaf masses", level_size(3, leaf_level))?;
    let lookup: HashMap<&[u8], usize> = family.iter().enumerate().map(|(k, a)| (a.symbols(), k)).collect();
    let mut acc = vec![0.0; family.len()];
    let mut total = 0.0;
    let mut path = Vec::with_capacity(leaf_level);
    let mut owner: Vec<Option<usize>> = vec![lookup.get(&[][..]).copied()];
    leaf_dfs(handle, &mut path, &mut owner, &lookup, 1.0, leaf_level, alpha, &mut acc, &mut total);
    let masses: BTreeMap<Address, f64> = family
        .iter()
        .zip(&acc)
        .map(|(a, m)| (a.clone(), m / total))
        .collect();
    let sum = masses.values().sum();
    Ok(MeasureAssignment {
        leaf_level,
        masses,
        total: sum,
    })
}

#[allow(clippy::too_many_arguments)]
fn leaf_dfs(
    handle: &CascadeHandle,
    path: &mut Vec<u8>,
    owner: &mut Vec<Option<usize>>,
    lookup: &HashMap<&[u8], usize>,
    l: f64,
    leaf_level: usize,
    alpha: f64,
    acc: &mut [f64],
    total: &mut f64,
) {
    if path.len() == leaf_level {
        let v = l.powf(alpha);
        *total += v;
        if let Some(k) = *owner.last().expect("owner stack") {
            acc[k] += v;
        }
        return;
    }
    let w = handle.triple_at(path);
    for k in 0..3 {
        path.push(k as u8 + 1);
        let current = owner.last().copied().flatten().or_else(|| lookup.get(path.as_slice()).copied());
        owner.push(current);
        leaf_dfs(handle, path, owner, lookup, l * w[k], leaf_level, alpha, acc, total);
        owner.pop();
        path.pop();
    }
}

/// `Σ_{j ∈ Σ_k} (l(ij) / l(i))^α`.
fn subtree_power_sum(handle: &CascadeHandle, i: &[u8], k: usize, alpha: f64) -> f64 {
    if let ScalingLaw::Deterministic { r1, r2, r3 } = handle.law {
        return (r1.powf(alpha) + r2.powf(alpha) + r3.powf(alpha)).powi(k as i32);
    }
    fn go(handle: &CascadeHandle, path: &mut Vec<u8>, k: usize, alpha: f64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let w = handle.triple_at(path);
        let mut s = 0.0;
        for c in 0..3 {
            path.push(c as u8 + 1);
            s += w[c].powf(alpha) * go(handle, path, k - 1, alpha);
            path.pop();
        }
        s
    }
    go(handle, &mut i.to_vec(), k, alpha)
}

/// Masses `∝ l(i)^α M^α_i(k)` with a fixed relative lookahead `k`,
/// normalised over the given cells (`(address, l(i))` pairs).
pub fn lookahead_masses(handle: &CascadeHandle, cells: &[(Address, f64)], alpha: f64, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = cells
        .iter()
        .map(|(a, l)| l.powf(alpha) * subtree_power_sum(handle, a.symbols(), k, alpha))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|m| m / total).collect()
}

/// How far below a candidate child the sampler looks when weighing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "depth", rename_all = "snake_case")]
pub enum MassLookahead {
    /// Masses from the common leaf level `L` (exactly the common-leaf measure).
    Absolute(usize),
    /// Masses from `k` further levels below each child.
    Relative(usize),
}

/// Draws the length-`depth` prefix of a ray with the self-similar law.
/// Point `point_index` selects an independent sampling stream.
pub fn sample_point(
    handle: &CascadeHandle,
    depth: usize,
    alpha: f64,
    lookahead: MassLookahead,
    point_index: u64,
) -> Result<Address> {
    if let MassLookahead::Absolute(l) = lookahead {
        if l < depth {
            return Err(Error::Domain(format!("leaf level {l} is above the sample depth {depth}")));
        }
    }
    let (ray, _) = sample_ray(handle, alpha, lookahead, point_index, depth, 0.0)?;
    Ok(ray)
}

/// Descends until either `max_depth` symbols are drawn or `l(ray) <= min_length`.
/// Returns the ray prefix and its path product.
pub fn sample_ray(
    handle: &CascadeHandle,
    alpha: f64,
    lookahead: MassLookahead,
    point_index: u64,
    max_depth: usize,
    min_length: f64,
) -> Result<(Address, f64)> {
    let mut rng = NodeStream::labelled(handle.seed, Namespace::Sampling, point_index);
    let mut path: Vec<u8> = Vec::new();
    let mut l = 1.0;
    while path.len() < max_depth && l > min_length {
        let rem = match lookahead {
            MassLookahead::Absolute(leaf) => leaf.saturating_sub(path.len() + 1),
            MassLookahead::Relative(k) => k,
        };
        handle.budget.check_nodes("sampling lookahead", level_size(3, rem))?;
        let w = handle.triple_at(&path);
        let mut weights = [0.0; 3];
        for k in 0..3 {
            path.push(k as u8 + 1);
            weights[k] = w[k].powf(alpha) * subtree_power_sum(handle, &path, rem, alpha);
            path.pop();
        }
        let total: f64 = weights.iter().sum();
        let u = rng.open01() * total;
        let pick = if u < weights[0] {
            0
        } else if u < weights[0] + weights[1] {
            1
        } else {
            2
        };
        path.push(pick as u8 + 1);
        l *= w[pick];
    }
    Ok((Address::from(path), l))
}

/// Distances and masses of every cell seen from one vertex.
#[derive(Debug, Clone)]
pub struct BallProfile {
    cells: Vec<CellView>,
    w_cap: f64,
}

#[derive(Debug, Clone, Copy)]
struct CellView {
    d_near: f64,
    d_far: f64,
    length: f64,
    mass: f64,
}

impl BallProfile {
    /// `masses[k]` is the mass of `graph.edges[k]`.
    pub fn new(graph: &DendriteGraph, masses: &[f64], x: VertexId, w_cap: f64) -> Self {
        let dist = graph.adjacency().tree_distances(x);
        let cells = graph
            .edges
            .iter()
            .zip(masses)
            .map(|(e, &mass)| {
                let a = dist[e.end_local0.0 as usize];
                let b = dist[e.end_local1.0 as usize];
                CellView {
                    d_near: a.min(b),
                    d_far: a.max(b),
                    length: e.length,
                    mass,
                }
            })
            .collect();
        BallProfile { cells, w_cap }
    }

    /// `(lower, upper)` bounds on the mass of the open ball of radius `r`.
    pub fn sandwich(&self, r: f64) -> (f64, f64) {
        let mut lower = 0.0;
        let mut upper = 0.0;
        for c in &self.cells {
            if c.d_near < r {
                upper += c.mass;
            }
            if c.d_far + c.length * self.w_cap <= r {
                lower += c.mass;
            }
        }
        (lower.min(upper), upper)
    }
}

/// Two-sided cover bounds for `μ(B(x, r))` on a graph whose edges are keyed
/// by the assignment's cells.
pub fn ball_mass_sandwich(
    graph: &DendriteGraph,
    masses: &MeasureAssignment,
    x: VertexId,
    r: f64,
    w_cap: f64,
) -> Result<(f64, f64)> {
    if (x.0 as usize) >= graph.vertex_count() {
        return Err(Error::NotFound(format!("vertex {} is not in the graph", x.0)));
    }
    let m: Vec<f64> = graph
        .edges
        .iter()
        .map(|e| {
            masses
                .mass(&e.address)
                .ok_or_else(|| Error::NotFound(format!("no mass for cell {}", e.address)))
        })
        .collect::<Result<_>>()?;
    Ok(BallProfile::new(graph, &m, x, w_cap).sandwich(r))
}

/// Where a focused graph must be fine: cells at distance `d < r_max` from the
/// focus are split until `l(i) <= max(d, r_min) / delta_ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocusRule {
    pub r_max: f64,
    pub r_min: f64,
    pub delta_ratio: f64,
}

/// A graph refined along `ray` and then around the end of the ray cell, with
/// resolution proportional to the distance from it. Returns the graph and the
/// focus vertex (the `(0,0)` image of the ray cell).
pub fn build_focused_graph(
    handle: &CascadeHandle,
    ray: &Address,
    rule: FocusRule,
    r_depth: usize,
) -> Result<(DendriteGraph, VertexId)> {
    let mut g = DendriteGraph::root(handle, r_depth);
    for m in 0..ray.len() {
        let prefix = ray.truncate(m)?;
        let idx = g.edge_index(&prefix).expect("spine cell present");
        g.split(idx, handle, Weigh::Now);
    }
    let x = g.edge(ray).expect("ray cell present").end_local0;
    let mut dist = g.adjacency().tree_distances(x);
    let mut stack: Vec<usize> = (0..g.edge_count()).collect();
    let cap = handle.budget.max_edges as usize;
    while let Some(idx) = stack.pop() {
        let e = &g.edges[idx];
        let (da, db) = (dist[e.end_local0.0 as usize], dist[e.end_local1.0 as usize]);
        let d_near = da.min(db);
        if d_near >= rule.r_max || e.length <= d_near.max(rule.r_min) / rule.delta_ratio {
            continue;
        }
        if g.edge_count() + 2 > cap {
            return Err(Error::Nontermination {
                edges: g.edge_count(),
                pending: stack.len() + 1,
                depth: e.address.len(),
            });
        }
        let slots = g.split(idx, handle, Weigh::Now);
        let w1 = g.edges[slots[0]].weight;
        let w2 = g.edges[slots[1]].weight;
        let w3 = g.edges[slots[2]].weight;
        // The focus lies outside the cell, so paths enter through an end.
        let dm = (da + w1).min(db + w2);
        dist.push(dm);
        dist.push(dm + w3);
        stack.extend_from_slice(&slots);
    }
    Ok((g, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionMethod {
    LocalScaling,
    CoverSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub method: DimensionMethod,
    pub slope: f64,
    pub stderr: f64,
    /// Radii for local scaling, levels `n` for cover sums.
    pub radii_or_levels: Vec<f64>,
    pub points: Vec<Address>,
    /// Per-point slopes, or the growth rate per θ for cover sums.
    pub samples: Vec<f64>,
    /// Radius evaluations dropped because the upper bound vanished.
    pub dropped: usize,
    pub alpha: f64,
    pub supported_by_theory: bool,
    pub warnings: Vec<String>,
}

/// Whether the lower bound on the dimension is covered by one of the two
/// known sufficient conditions: `w1 + w2 = 1` with weights bounded below, or
/// independent coordinates with the lower-tail condition.
pub fn supported_by_theory(law: &ScalingLaw) -> bool {
    match law {
        ScalingLaw::BoundedPairPlusOne { .. } => true,
        ScalingLaw::Deterministic { r1, r2, .. } => (r1 + r2 - 1.0).abs() < 1e-12,
        _ => {
            check_condition_a(law)
                && law.independent_coordinates()
                && check_condition_c(law, 0.05, &default_x_grid())
                    .map(|c| c.holds)
                    .unwrap_or(false)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDimensionParams {
    pub radii: Vec<f64>,
    pub n_points: usize,
    pub delta_ratio: f64,
    pub r_depth: usize,
    /// Relative lookahead for masses and point sampling.
    pub mass_lookahead: usize,
    pub w_cap: f64,
}

impl Default for LocalDimensionParams {
    fn default() -> Self {
        LocalDimensionParams {
            radii: geometric_radii(-1.0, -6.0, 8),
            n_points: 20,
            delta_ratio: DEFAULT_DELTA_RATIO,
            r_depth: 8,
            mass_lookahead: 4,
            w_cap: DEFAULT_W_CAP,
        }
    }
}

/// `e^{a}, .., e^{b}` in `count` geometric steps.
pub fn geometric_radii(log_hi: f64, log_lo: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![log_hi.exp()];
    }
    (0..count)
        .map(|k| (log_hi + (log_lo - log_hi) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Per-point ball masses at each radius: `(radius, lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointProfile {
    pub seed: u64,
    pub point: Address,
    pub rows: Vec<(f64, f64, f64)>,
    pub slope: Option<f64>,
}

/// One sampled point: its ray, focused graph and ball-mass profile.
pub fn point_profile(
    handle: &CascadeHandle,
    alpha: f64,
    params: &LocalDimensionParams,
    point_index: u64,
) -> Result<PointProfile> {
    let r_max = params.radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let r_min = params.radii.iter().copied().fold(f64::INFINITY, f64::min);
    let rule = FocusRule {
        r_max,
        r_min,
        delta_ratio: params.delta_ratio,
    };
    let (ray, _) = sample_ray(
        handle,
        alpha,
        MassLookahead::Relative(params.mass_lookahead),
        point_index,
        crate::dendrite::MAX_EXPANSION_DEPTH,
        r_min / params.delta_ratio,
    )?;
    let (graph, x) = build_focused_graph(handle, &ray, rule, params.r_depth)?;
    let cells: Vec<(Address, f64)> = graph.edges.iter().map(|e| (e.address.clone(), e.length)).collect();
    let masses = lookahead_masses(handle, &cells, alpha, params.mass_lookahead);
    let profile = BallProfile::new(&graph, &masses, x, params.w_cap);
    let rows: Vec<(f64, f64, f64)> = params
        .radii
        .iter()
        .map(|&r| {
            let (lo, up) = profile.sandwich(r);
            (r, lo, up)
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(_, _, up)| *up > 0.0)
        .map(|(r, lo, up)| (r.ln(), (0.5 * (lo + up)).ln()))
        .collect();
    let slope = fit_line(&pts).ok().map(|f| f.slope);
    Ok(PointProfile {
        seed: handle.seed,
        point: ray,
        rows,
        slope,
    })
}

/// Mean local scaling exponent of `μ(B(x, r))` over sampled points and replicas.
pub fn local_dimension(handles: &[CascadeHandle], params: &LocalDimensionParams) -> Result<DimensionEstimate> {
    let (est, _) = local_dimension_with_profiles(handles, params)?;
    Ok(est)
}

pub fn local_dimension_with_profiles(
    handles: &[CascadeHandle],
    params: &LocalDimensionParams,
) -> Result<(DimensionEstimate, Vec<PointProfile>)> {
    let first = handles
        .first()
        .ok_or_else(|| Error::validation("seeds", "need at least one replica"))?;
    validate_radii(&params.radii)?;
    if params.n_points == 0 {
        return Err(Error::validation("n_points", "need at least one point"));
    }
    let alpha = solve_alpha(&first.law, DEFAULT_ALPHA_TOL)?;
    let mut profiles = Vec::new();
    for h in handles {
        for p in 0..params.n_points {
            profiles.push(point_profile(h, alpha, params, p as u64)?);
        }
    }
    let slopes: Vec<f64> = profiles.iter().filter_map(|p| p.slope).collect();
    let dropped = profiles
        .iter()
        .map(|p| p.rows.iter().filter(|r| r.2 <= 0.0).count())
        .sum();
    if slopes.is_empty() {
        return Err(Error::Statistical("no point produced a usable profile".into()));
    }
    let (slope, _) = mean_stderr(slopes.iter().copied());
    let stderr = std_dev(&slopes) / (slopes.len() as f64).sqrt();
    let mut warnings = Vec::new();
    if dropped > 0 {
        warnings.push(format!("{dropped} radius evaluations dropped: empty upper bound"));
    }
    let supported = supported_by_theory(&first.law);
    if !supported {
        warnings.push("unsupported by theory".into());
    }
    Ok((
        DimensionEstimate {
            method: DimensionMethod::LocalScaling,
            slope,
            stderr,
            radii_or_levels: params.radii.clone(),
            points: profiles.iter().map(|p| p.point.clone()).collect(),
            samples: slopes,
            dropped,
            alpha,
            supported_by_theory: supported,
            warnings,
        },
        profiles,
    ))
}

fn validate_radii(radii: &[f64]) -> Result<()> {
    if radii.len() < 3 || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::validation("radii", "need at least 3 positive radii"));
    }
    let hi = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    if (hi / lo).log10() < 2.0 - 1e-9 {
        return Err(Error::validation("radii", "radii must span at least two decades"));
    }
    Ok(())
}

/// Diameter data of a refined cell: distance between its ends, eccentricity
/// of each end and the diameter.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CellShape {
    d01: f64,
    e0: f64,
    e1: f64,
    diam: f64,
}

fn cell_shape(handle: &CascadeHandle, path: &mut Vec<u8>, l: f64, s: usize, r_depth: usize) -> CellShape {
    if s == 0 {
        let w = l * resistance_value(handle, path, r_depth);
        return CellShape {
            d01: w,
            e0: w,
            e1: w,
            diam: w,
        };
    }
    let w = handle.triple_at(path);
    let mut c = [CellShape {
        d01: 0.0,
        e0: 0.0,
        e1: 0.0,
        diam: 0.0,
    }; 3];
    for k in 0..3 {
        path.push(k as u8 + 1);
        c[k] = cell_shape(handle, path, l * w[k], s - 1, r_depth);
        path.pop();
    }
    // Children meet at the branch point (their local end 0); child 1 leads to
    // the cell's end 0, child 2 to its end 1, child 3 to the tip.
    let mut spokes = [c[0].e0, c[1].e0, c[2].e0];
    spokes.sort_by(|a, b| b.total_cmp(a));
    CellShape {
        d01: c[0].d01 + c[1].d01,
        e0: c[0].e1.max(c[0].d01 + c[1].e0.max(c[2].e0)),
        e1: c[1].e1.max(c[1].d01 + c[0].e0.max(c[2].e0)),
        diam: c[0].diam.max(c[1].diam).max(c[2].diam).max(spokes[0] + spokes[1]),
    }
}

/// Resistance diameter of cell `i` read off its depth-`s` refinement.
pub fn cell_diameter(handle: &CascadeHandle, i: &Address, s: usize, r_depth: usize) -> f64 {
    let l = handle.path_product(i);
    cell_shape(handle, &mut i.symbols().to_vec(), l, s, r_depth).diam
}

/// `S_n(θ) = Σ_{i ∈ Σ_n} diam(T_i)^θ` for `n = 1..=n_max` and every θ;
/// indexed `[n - 1][θ]`.
pub fn cover_sums(
    handle: &CascadeHandle,
    theta_grid: &[f64],
    n_max: usize,
    subtree_depth: usize,
    r_depth: usize,
) -> Result<Vec<Vec<f64>>> {
    handle
        .budget
        .check_nodes("cover sums", level_size(3, n_max + subtree_depth))?;
    let mut out = vec![vec![0.0; theta_grid.len()]; n_max];
    for n in 1..=n_max {
        let row = &mut out[n - 1];
        let mut cells = Vec::new();
        handle.for_each_descendant(&Address::root(), n, |p, l| cells.push((p.to_vec(), l)));
        for (mut path, l) in cells {
            let d = cell_shape(handle, &mut path, l, subtree_depth, r_depth).diam;
            for (t, theta) in theta_grid.iter().enumerate() {
                row[t] += d.powf(*theta);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSumParams {
    pub theta_grid: Vec<f64>,
    pub n_max: usize,
    pub subtree_depth: usize,
    pub r_depth: usize,
}

impl Default for CoverSumParams {
    fn default() -> Self {
        CoverSumParams {
            theta_grid: (0..=30).map(|k| 1.0 + 0.05 * k as f64).collect(),
            n_max: 7,
            subtree_depth: 3,
            r_depth: 6,
        }
    }
}

/// Growth rate of `log mean S_n(θ)` in `n` for each θ, from per-replica sums.
fn growth_rates(sums: &[Vec<Vec<f64>>], keep: &dyn Fn(usize) -> bool, n_theta: usize) -> Result<Vec<f64>> {
    let n_max = sums[0].len();
    let used: Vec<&Vec<Vec<f64>>> = sums.iter().enumerate().filter(|(k, _)| keep(*k)).map(|(_, s)| s).collect();
    let count = used.len() as f64;
    (0..n_theta)
        .map(|t| {
            let pts: Vec<(f64, f64)> = (0..n_max)
                .map(|n| {
                    let mean = used.iter().map(|s| s[n][t]).sum::<f64>() / count;
                    ((n + 1) as f64, mean.ln())
                })
                .collect();
            fit_line(&pts).map(|f| f.slope)
        })
        .collect()
}

/// First θ where the growth rate crosses zero, by linear interpolation.
fn zero_crossing(theta: &[f64], rate: &[f64]) -> Option<f64> {
    for k in 0..theta.len().saturating_sub(1) {
        let (a, b) = (rate[k], rate[k + 1]);
        if a == 0.0 {
            return Some(theta[k]);
        }
        if a > 0.0 && b <= 0.0 {
            return Some(theta[k] + (theta[k + 1] - theta[k]) * a / (a - b));
        }
    }
    None
}

/// The θ at which the cover sums stop growing, with a jackknife stderr over replicas.
pub fn cover_sum_exponent(handles: &[CascadeHandle], params: &CoverSumParams) -> Result<DimensionEstimate> {
    let first = handles
        .first()
        .ok_or_else(|| Error::validation("seeds", "need at least one replica"))?;
    if params.n_max < 3 {
        return Err(Error::validation("n_max", "need at least 3 levels for a growth fit"));
    }
    let grid = &params.theta_grid;
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("theta_grid", "need an increasing grid of at least 2 values"));
    }
    let sums: Vec<Vec<Vec<f64>>> = handles
        .iter()
        .map(|h| cover_sums(h, grid, params.n_max, params.subtree_depth, params.r_depth))
        .collect::<Result<_>>()?;
    let rates = growth_rates(&sums, &|_| true, grid.len())?;
    let mut warnings = Vec::new();
    if rates.windows(2).any(|w| w[1] > w[0] + 1e-9) {
        warnings.push("growth rate is not monotone in theta".into());
    }
    let crossing = zero_crossing(grid, &rates)
        .ok_or_else(|| Error::Statistical(format!("growth rate does not cross zero on the grid: {rates:?}")))?;
    let stderr = jackknife(handles.len(), |drop| {
        growth_rates(&sums, &|k| k != drop, grid.len())
            .ok()
            .and_then(|r| zero_crossing(grid, &r))
    })
    .unwrap_or(f64::NAN);
    let alpha = solve_alpha(&first.law, DEFAULT_ALPHA_TOL)?;
    let supported = supported_by_theory(&first.law);
    if !supported {
        warnings.push("unsupported by theory".into());
    }
    Ok(DimensionEstimate {
        method: DimensionMethod::CoverSum,
        slope: crossing,
        stderr,
        radii_or_levels: (1..=params.n_max).map(|n| n as f64).collect(),
        points: Vec::new(),
        samples: rates,
        dropped: 0,
        alpha,
        supported_by_theory: supported,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dendrite::build_level;

    #[test]
    fn deterministic_masses_are_uniform() {
        let h = CascadeHandle::new(0, ScalingLaw::halves());
        let alpha = 3f64.ln() / 2f64.ln();
        let fam = Address::level(2, 3);
        for leaf in [2, 4] {
            let m = cell_masses(&h, &fam, leaf, alpha).unwrap();
            assert!(m.masses.values().all(|v| (v - 1.0 / 9.0).abs() < 1e-12));
            assert!((m.total - 1.0).abs() < 1e-12);
        }
        let root = cell_masses(&h, &[Address::root()], 3, alpha).unwrap();
        assert!((root.mass(&Address::root()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn masses_reject_bad_families() {
        let h = CascadeHandle::new(0, ScalingLaw::uniform());
        let fam = vec!["1".parse().unwrap(), "1.2".parse().unwrap()];
        assert!(cell_masses(&h, &fam, 3, 2.0).is_err());
        assert!(cell_masses(&h, &Address::level(3, 3), 2, 2.0).is_err());
    }

    #[test]
    fn depth_zero_sample_is_root() {
        let h = CascadeHandle::new(0, ScalingLaw::uniform());
        assert_eq!(sample_point(&h, 0, 2.0, MassLookahead::Relative(2), 0).unwrap(), Address::root());
        let p = sample_point(&h, 5, 2.0, MassLookahead::Absolute(6), 3).unwrap();
        assert_eq!(p.len(), 5);
    }

    #[test]
    fn sandwich_extremes() {
        let h = CascadeHandle::new(0, ScalingLaw::uniform());
        let g = build_level(&h, 3, 4).unwrap();
        let fam: Vec<Address> = g.edges.iter().map(|e| e.address.clone()).collect();
        let m = cell_masses(&h, &fam, 5, 2.0).unwrap();
        let x = g.boundary0();
        let (dmax, _) = g.graph_diameter();
        let big = dmax + DEFAULT_W_CAP * g.edges.iter().map(|e| e.length).fold(0.0, f64::max) + 1e-9;
        let (lo, up) = ball_mass_sandwich(&g, &m, x, big, DEFAULT_W_CAP).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (up - 1.0).abs() < 1e-12);
        let (lo, _) = ball_mass_sandwich(&g, &m, x, 0.0, DEFAULT_W_CAP).unwrap();
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn cell_shape_matches_graph_diameter() {
        let h = CascadeHandle::new(4, ScalingLaw::uniform());
        let g = build_level(&h, 4, 3).unwrap();
        for cell in Address::level(1, 3) {
            let sub = g.cell_subgraph(&cell);
            let (d, _) = sub.graph_diameter();
            assert!((cell_diameter(&h, &cell, 3, 3) - d).abs() < 1e-12);
        }
        assert!((cell_diameter(&h, &Address::root(), 4, 3) - g.graph_diameter().0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_cover_sums() {
        let h = CascadeHandle::new(0, ScalingLaw::halves());
        let grid = [0.5, 1.0, 1.5];
        let s = cover_sums(&h, &grid, 4, 2, 2).unwrap();
        for n in 1..=4 {
            for (t, theta) in grid.iter().enumerate() {
                let exact = 3f64.powi(n as i32) * 2f64.powf(-(n as f64) * theta);
                assert!((s[n - 1][t] - exact).abs() < 1e-9 * exact);
            }
        }
    }

    #[test]
    fn zero_crossing_interpolates() {
        assert_eq!(zero_crossing(&[1.0, 2.0], &[1.0, -1.0]), Some(1.5));
        assert_eq!(zero_crossing(&[1.0, 2.0], &[1.0, 0.5]), None);
    }
}
