//! Resistance perturbations, tree height and the embedded Galton-Watson process.

use serde::{Deserialize, Serialize};

use crate::addr::Address;
use crate::cascade::{level_size, CascadeHandle};
use crate::error::{Error, Result};
use crate::law::ScalingLaw;
use crate::rng::{Namespace, NodeStream};

/// Default truncation depth for resistance perturbations.
pub const DEFAULT_R_DEPTH: usize = 20;

/// `Σ_{j ∈ {1,2}^k} l(ij) / l(i)` together with its last increment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistanceApprox {
    pub address: Address,
    pub depth: usize,
    pub value: f64,
    /// `|value_k - value_{k-1}|`; 0 at depth 0.
    pub last_increment: f64,
}

pub fn resistance(handle: &CascadeHandle, i: &Address, depth: usize) -> Result<ResistanceApprox> {
    handle
        .budget
        .check_nodes("resistance sum", level_size(2, depth))?;
    let (value, prev) = resistance_pair(handle, i.symbols(), depth);
    Ok(ResistanceApprox {
        address: i.clone(),
        depth,
        value,
        last_increment: if depth == 0 { 0.0 } else { (value - prev).abs() },
    })
}

/// The approximant at `depth` without budget checks or bookkeeping.
pub fn resistance_value(handle: &CascadeHandle, i: &[u8], depth: usize) -> f64 {
    match handle.law {
        ScalingLaw::Deterministic { r1, r2, .. } => (r1 + r2).powi(depth as i32),
        // w1 + w2 = 1 surely, so every approximant is exactly 1.
        ScalingLaw::BoundedPairPlusOne { .. } => 1.0,
        _ => {
            let mut path = i.to_vec();
            binary_sum(handle, &mut path, depth)
        }
    }
}

/// Values at `depth` and `depth - 1` (the latter equals the former at depth 0).
fn resistance_pair(handle: &CascadeHandle, i: &[u8], depth: usize) -> (f64, f64) {
    if depth == 0 {
        return (1.0, 1.0);
    }
    match handle.law {
        ScalingLaw::Deterministic { .. } | ScalingLaw::BoundedPairPlusOne { .. } => (
            resistance_value(handle, i, depth),
            resistance_value(handle, i, depth - 1),
        ),
        _ => {
            let mut sums = vec![0.0; depth + 1];
            let mut path = i.to_vec();
            level_sums(handle, &mut path, 0, 1.0, &mut sums);
            (sums[depth], sums[depth - 1])
        }
    }
}

fn binary_sum(handle: &CascadeHandle, path: &mut Vec<u8>, depth: usize) -> f64 {
    if depth == 0 {
        return 1.0;
    }
    let w = handle.triple_at(path);
    let mut total = 0.0;
    for k in 0..2 {
        path.push(k as u8 + 1);
        total += w[k] * binary_sum(handle, path, depth - 1);
        path.pop();
    }
    total
}

fn level_sums(handle: &CascadeHandle, path: &mut Vec<u8>, level: usize, ratio: f64, sums: &mut [f64]) {
    sums[level] += ratio;
    if level + 1 == sums.len() {
        return;
    }
    let w = handle.triple_at(path);
    for k in 0..2 {
        path.push(k as u8 + 1);
        level_sums(handle, path, level + 1, ratio * w[k], sums);
        path.pop();
    }
}

/// Checks `R_i^{(k)} = w(i1) R_{i1}^{(k-1)} + w(i2) R_{i2}^{(k-1)}` to 1e-12.
pub fn resistance_recursion_check(handle: &CascadeHandle, i: &Address, depth: usize) -> bool {
    if depth == 0 {
        return resistance_value(handle, i.symbols(), 0) == 1.0;
    }
    let lhs = resistance_value(handle, i.symbols(), depth);
    let w = handle.sibling_triple(i);
    let rhs = w[0] * resistance_value(handle, i.child(1).symbols(), depth - 1)
        + w[1] * resistance_value(handle, i.child(2).symbols(), depth - 1);
    (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0)
}

/// Law of the i.i.d. perturbations `X_i` entering the height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationLaw {
    /// `X ≡ 1`.
    #[default]
    Unit,
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl PerturbationLaw {
    fn draw(&self, seed: u64, path: &[u8]) -> f64 {
        match *self {
            PerturbationLaw::Unit => 1.0,
            PerturbationLaw::Exponential { rate } => {
                let u = NodeStream::new(seed, Namespace::Perturbation, path).open01();
                -u.ln() / rate
            }
            PerturbationLaw::Uniform { lo, hi } => {
                let u = NodeStream::new(seed, Namespace::Perturbation, path).open01();
                lo + (hi - lo) * u
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PerturbationLaw::Unit => Ok(()),
            PerturbationLaw::Exponential { rate } if rate > 0.0 && rate.is_finite() => Ok(()),
            PerturbationLaw::Uniform { lo, hi } if lo >= 0.0 && hi > lo && hi.is_finite() => Ok(()),
            _ => Err(Error::validation("perturbation", format!("bad parameters {self:?}"))),
        }
    }
}

/// Partial heights of one cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightSample {
    pub depth: usize,
    /// `H_n = max_{i ∈ Σ_n} Σ_{m ≤ n} l(i|m) X_{i|m}`.
    pub value: f64,
    pub perturbation: PerturbationLaw,
    /// `H_0, .., H_n`.
    pub partial: Vec<f64>,
    /// `max_{i ∈ Σ_m} l(i) X_i` for `m = 0..=n`.
    pub level_sups: Vec<f64>,
}

/// Exhaustive depth-first maximisation over `Σ_{<= n}`.
pub fn partial_height(handle: &CascadeHandle, n: usize, x_law: PerturbationLaw) -> Result<HeightSample> {
    x_law.validate()?;
    handle.budget.check_nodes("height search", level_size(3, n))?;
    let mut partial = vec![f64::NEG_INFINITY; n + 1];
    let mut level_sups = vec![f64::NEG_INFINITY; n + 1];
    let mut path = Vec::with_capacity(n);
    height_dfs(handle, &x_law, &mut path, 1.0, 0.0, n, &mut partial, &mut level_sups);
    Ok(HeightSample {
        depth: n,
        value: partial[n],
        perturbation: x_law,
        partial,
        level_sups,
    })
}

#[allow(clippy::too_many_arguments)]
fn height_dfs(
    handle: &CascadeHandle,
    x_law: &PerturbationLaw,
    path: &mut Vec<u8>,
    l: f64,
    acc: f64,
    n: usize,
    partial: &mut [f64],
    level_sups: &mut [f64],
) {
    let m = path.len();
    let term = l * x_law.draw(handle.seed, path);
    let acc = acc + term;
    partial[m] = partial[m].max(acc);
    level_sups[m] = level_sups[m].max(term);
    if m == n {
        return;
    }
    let w = handle.triple_at(path);
    for k in 0..3 {
        path.push(k as u8 + 1);
        height_dfs(handle, x_law, path, l * w[k], acc, n, partial, level_sups);
        path.pop();
    }
}

/// `Z_m = #{i ∈ Σ_m : w(i|1) = .. = w(i) = 1}` for `m = 0..=n`, by pruned search
/// on the stored atom indices.
pub fn gw_population(handle: &CascadeHandle, n: usize) -> Result<Vec<u64>> {
    if !matches!(handle.law, ScalingLaw::DiscreteIID { .. }) {
        return Err(Error::Precondition(format!(
            "population counts need a discrete law with atoms, got {}",
            handle.law.name()
        )));
    }
    let unit = handle.law.unit_atoms();
    let mut z = vec![0u64; n + 1];
    z[0] = 1;
    let mut frontier: Vec<Address> = vec![Address::root()];
    for m in 1..=n {
        let mut next = Vec::new();
        for parent in &frontier {
            let atoms = handle.sibling_atoms(parent).expect("discrete law");
            for (k, atom) in atoms.iter().enumerate() {
                if unit.contains(atom) {
                    next.push(parent.child(k as u8 + 1));
                }
            }
        }
        handle.budget.check_nodes("population search", next.len() as u64)?;
        z[m] = next.len() as u64;
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(z)
}
