//! The multiplicative cascade `(w(i))` as a lazy, address-keyed oracle.

use serde::{Deserialize, Serialize};

use crate::addr::{Address, DENDRITE_ARITY};
use crate::error::{Error, Result};
use crate::law::ScalingLaw;
use crate::rng::{Namespace, NodeStream};

/// Default sample count for Monte Carlo moments.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
/// Default bisection tolerance on θ.
pub const DEFAULT_ALPHA_TOL: f64 = 1e-10;
const BRACKET_CAP: f64 = (1u64 << 20) as f64;
/// Fixed seed for Monte Carlo moments, so F is a deterministic function of θ.
const MC_SEED: u64 = 0x0f0f_1d1d_2a2a_3b3b;

/// Work limits shared by the exhaustive sums and graph builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_nodes: u64,
    pub max_edges: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_nodes: 3u64.pow(15),
            max_edges: 10_000_000,
        }
    }
}

impl Budget {
    pub fn check_nodes(&self, what: &'static str, needed: u64) -> Result<()> {
        if needed > self.max_nodes {
            return Err(Error::Budget {
                what,
                needed,
                limit: self.max_nodes,
            });
        }
        Ok(())
    }
}

/// `arity^n`, saturating.
pub(crate) fn level_size(arity: u64, n: usize) -> u64 {
    arity.saturating_pow(n.min(u32::MAX as usize) as u32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeHandle {
    pub seed: u64,
    pub law: ScalingLaw,
    #[serde(default)]
    pub budget: Budget,
}

impl CascadeHandle {
    pub fn new(seed: u64, law: ScalingLaw) -> Self {
        CascadeHandle {
            seed,
            law,
            budget: Budget::default(),
        }
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    /// The handle for replica `idx` of an experiment with base seed `self.seed`.
    pub fn replica(&self, idx: u64) -> Self {
        CascadeHandle {
            seed: self.seed.wrapping_add(idx),
            ..self.clone()
        }
    }

    pub fn arity(&self) -> u8 {
        DENDRITE_ARITY
    }

    fn stream(&self, parent: &[u8]) -> NodeStream {
        NodeStream::new(self.seed, Namespace::Weights, parent)
    }

    /// `(w(i1), w(i2), w(i3))` for parent `i`, given as raw symbols.
    #[inline]
    pub fn triple_at(&self, parent: &[u8]) -> [f64; 3] {
        if let ScalingLaw::Deterministic { r1, r2, r3 } = self.law {
            return [r1, r2, r3];
        }
        self.law.sample(&mut self.stream(parent))
    }

    pub fn sibling_triple(&self, parent: &Address) -> [f64; 3] {
        self.triple_at(parent.symbols())
    }

    /// Atom indices behind [`CascadeHandle::sibling_triple`] for discrete laws.
    pub fn sibling_atoms(&self, parent: &Address) -> Option<[usize; 3]> {
        self.law.sample_atoms(&mut self.stream(parent.symbols()))
    }

    /// `w(i)`; the root carries weight 1.
    pub fn weight(&self, i: &Address) -> f64 {
        match i.symbols().split_last() {
            None => 1.0,
            Some((&last, parent)) => self.triple_at(parent)[(last - 1) as usize],
        }
    }

    /// `l(i) = w(i|1) w(i|2) .. w(i)`.
    pub fn path_product(&self, i: &Address) -> f64 {
        let s = i.symbols();
        (0..s.len())
            .map(|m| self.triple_at(&s[..m])[(s[m] - 1) as usize])
            .product()
    }

    /// Calls `f(path, ratio)` for every word `ij` with `|j| = depth`, where
    /// `ratio = l(ij) / l(i)`. Words are visited in lexicographic order.
    pub fn for_each_descendant<F: FnMut(&[u8], f64)>(&self, i: &Address, depth: usize, mut f: F) {
        let mut path = i.symbols().to_vec();
        self.descend(&mut path, depth, 1.0, &mut f);
    }

    fn descend<F: FnMut(&[u8], f64)>(&self, path: &mut Vec<u8>, depth: usize, ratio: f64, f: &mut F) {
        if depth == 0 {
            f(path, ratio);
            return;
        }
        let w = self.triple_at(path);
        for k in 0..3 {
            path.push(k as u8 + 1);
            self.descend(path, depth - 1, ratio * w[k], f);
            path.pop();
        }
    }
}

/// Evaluator of `F(θ)`: the closed form when the family has one, otherwise a
/// fixed Monte Carlo sample reused for every θ so that the estimate is itself
/// continuous and decreasing in θ.
#[derive(Debug, Clone)]
pub struct MomentOracle {
    law: ScalingLaw,
    samples: Option<Vec<[f64; 3]>>,
}

impl MomentOracle {
    pub fn new(law: &ScalingLaw, mc_samples: usize) -> Self {
        let samples = if law.f_theta_exact(1.0).is_some() {
            None
        } else {
            let mut rng = NodeStream::labelled(MC_SEED, Namespace::MonteCarlo, 0);
            Some((0..mc_samples.max(2)).map(|_| law.sample(&mut rng)).collect())
        };
        MomentOracle {
            law: law.clone(),
            samples,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.samples.is_none()
    }

    /// `(F(θ), stderr)`; the stderr is 0 for closed forms.
    pub fn eval(&self, theta: f64) -> Result<(f64, f64)> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!("theta must be positive, got {theta}")));
        }
        match &self.samples {
            None => Ok((self.law.f_theta_exact(theta).expect("closed form"), 0.0)),
            Some(s) => {
                let vals = s.iter().map(|w| w.iter().map(|x| x.powf(theta)).sum::<f64>());
                let (mean, se) = crate::stats::mean_stderr(vals);
                Ok((mean, se))
            }
        }
    }

    /// `E w(k)`, exact or Monte Carlo.
    pub fn coordinate_mean(&self, k: usize) -> (f64, f64) {
        match &self.samples {
            None => (self.law.coordinate_moment(k, 1.0).expect("closed form"), 0.0),
            Some(s) => crate::stats::mean_stderr(s.iter().map(|w| w[k])),
        }
    }
}

/// `F(θ) = E Σ_k w(k)^θ` with its standard error.
pub fn mean_sum_theta(law: &ScalingLaw, theta: f64, mc_samples: usize) -> Result<(f64, f64)> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    MomentOracle::new(law, mc_samples).eval(theta)
}

/// The root α of `F(α) = 1`.
pub fn solve_alpha(law: &ScalingLaw, tol: f64) -> Result<f64> {
    solve_alpha_with(&MomentOracle::new(law, DEFAULT_MC_SAMPLES), tol)
}

pub fn solve_alpha_with(oracle: &MomentOracle, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    if !check_condition_b(&oracle.law) {
        return Err(Error::Condition(format!(
            "sum of P(w = 1) is {} >= 1",
            oracle.law.unit_mass()
        )));
    }
    let f = |t: f64| oracle.eval(t).map(|(v, _)| v);
    let mut lo = tol;
    if f(lo)? <= 1.0 {
        return Err(Error::NoRoot(format!("F({lo}) <= 1 already at the left end")));
    }
    let mut hi = 1.0f64.max(2.0 * lo);
    while f(hi)? >= 1.0 {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::NoRoot(format!("F(theta) >= 1 for all theta up to {BRACKET_CAP}")));
        }
    }
    let eps = tol.min(DEFAULT_ALPHA_TOL);
    for _ in 0..200 {
        if hi - lo <= eps * lo.max(1.0) * 1e-2 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `M^θ(n) = Σ_{i ∈ Σ_n} l(i)^θ F(θ)^{-n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleValue {
    pub theta: f64,
    pub depth: usize,
    pub value: f64,
}

pub fn martingale(handle: &CascadeHandle, theta: f64, n: usize) -> Result<MartingaleValue> {
    let (f, _) = MomentOracle::new(&handle.law, DEFAULT_MC_SAMPLES).eval(theta)?;
    martingale_with_f(handle, theta, f, n)
}

/// As [`martingale`] with `F(θ)` supplied by the caller.
pub fn martingale_with_f(
    handle: &CascadeHandle,
    theta: f64,
    f_theta: f64,
    n: usize,
) -> Result<MartingaleValue> {
    let value = martingale_limit_approx_with_f(handle, theta, f_theta, &Address::root(), n)?;
    Ok(MartingaleValue {
        theta,
        depth: n,
        value,
    })
}

/// `Σ_{j ∈ Σ_k} l(ij)^θ / (l(i)^θ F(θ)^k)`, the depth-`k` stand-in for `M^θ_i`.
pub fn martingale_limit_approx(
    handle: &CascadeHandle,
    theta: f64,
    i: &Address,
    residual_depth: usize,
) -> Result<f64> {
    let (f, _) = MomentOracle::new(&handle.law, DEFAULT_MC_SAMPLES).eval(theta)?;
    martingale_limit_approx_with_f(handle, theta, f, i, residual_depth)
}

pub fn martingale_limit_approx_with_f(
    handle: &CascadeHandle,
    theta: f64,
    f_theta: f64,
    i: &Address,
    residual_depth: usize,
) -> Result<f64> {
    handle
        .budget
        .check_nodes("martingale sum", level_size(3, residual_depth))?;
    if let ScalingLaw::Deterministic { r1, r2, r3 } = handle.law {
        let per_level = (r1.powf(theta) + r2.powf(theta) + r3.powf(theta)) / f_theta;
        return Ok(per_level.powi(residual_depth as i32));
    }
    let mut sum = 0.0;
    handle.for_each_descendant(i, residual_depth, |_, r| sum += r.powf(theta));
    Ok(sum / f_theta.powi(residual_depth as i32))
}

/// `E(w(1) + w(2)) = 1`, exact for closed forms and within 4 standard errors otherwise.
pub fn check_condition_a(law: &ScalingLaw) -> bool {
    if let (Some(a), Some(b)) = (law.coordinate_moment(0, 1.0), law.coordinate_moment(1, 1.0)) {
        return (a + b - 1.0).abs() <= 1e-12;
    }
    let oracle = MomentOracle::new(law, DEFAULT_MC_SAMPLES);
    let (m1, s1) = oracle.coordinate_mean(0);
    let (m2, s2) = oracle.coordinate_mean(1);
    (m1 + m2 - 1.0).abs() <= 4.0 * (s1 + s2)
}

/// `Σ_k P(w(k) = 1) < 1`.
pub fn check_condition_b(law: &ScalingLaw) -> bool {
    law.unit_mass() < 1.0
}

/// Default grid for the lower-tail checks: `x = 2^{-k}`, `k = 0..=20`.
pub fn default_x_grid() -> Vec<f64> {
    (0..=20).map(|k| 0.5f64.powi(k)).collect()
}

/// Decreasing logarithmic ε grid `10^{-k/10}`, `k = 1..=100`.
pub fn epsilon_grid() -> Vec<f64> {
    (1..=100).map(|k| 10f64.powf(-(k as f64) / 10.0)).collect()
}

/// Outcome of the lower-tail check: whether some grid ε satisfies
/// `Φ(εx) <= p Φ(x)` on every grid `x`, and the largest such ε (0 if none).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionC {
    pub holds: bool,
    pub epsilon: f64,
}

/// Searches the ε grid for the largest value with `Φ(εx) <= p Φ(x)` at every
/// `x` in `x_grid`, using the exact marginal distribution function.
pub fn check_condition_c(law: &ScalingLaw, p: f64, x_grid: &[f64]) -> Result<ConditionC> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p must lie in (0, 1), got {p}")));
    }
    if !law.independent_coordinates() || law.is_degenerate() {
        return Err(Error::Unsupported(format!(
            "lower-tail condition needs independent, non-degenerate coordinates; {} is not",
            law.name()
        )));
    }
    let phi = |x: f64| {
        law.coordinate_cdf(0, x)
            .ok_or_else(|| Error::Unsupported(format!("no distribution function for {}", law.name())))
    };
    let mut pairs = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::Domain(format!("x grid values must lie in (0, 1], got {x}")));
        }
        let px = phi(x)?;
        if px > 0.0 {
            pairs.push((x, px));
        }
    }
    for eps in epsilon_grid() {
        let mut ok = true;
        for &(x, px) in &pairs {
            if phi(eps * x)? > p * px * (1.0 + 1e-12) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(ConditionC {
                holds: true,
                epsilon: eps,
            });
        }
    }
    Ok(ConditionC {
        holds: false,
        epsilon: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Address {
        s.parse().unwrap()
    }

    #[test]
    fn deterministic_products() {
        let h = CascadeHandle::new(1, ScalingLaw::halves());
        assert_eq!(h.sibling_triple(&a("2.1")), [0.5, 0.5, 0.5]);
        assert_eq!(h.path_product(&Address::root()), 1.0);
        assert_eq!(h.path_product(&a("1.2")), 0.25);
        let h = CascadeHandle::new(
            1,
            ScalingLaw::Deterministic {
                r1: 0.3,
                r2: 0.7,
                r3: 0.5,
            },
        );
        assert!((h.path_product(&a("3.1")) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn queries_are_order_independent() {
        let h = CascadeHandle::new(11, ScalingLaw::uniform());
        let first = h.sibling_triple(&Address::root());
        let _ = h.sibling_triple(&a("1.2.3"));
        assert_eq!(h.sibling_triple(&Address::root()), first);
        assert_ne!(h.sibling_triple(&a("1")), first);
    }

    #[test]
    fn alpha_closed_forms() {
        assert!((solve_alpha(&ScalingLaw::uniform(), 1e-10).unwrap() - 2.0).abs() < 1e-9);
        let d = solve_alpha(&ScalingLaw::halves(), 1e-10).unwrap();
        assert!((d - 3f64.ln() / 2f64.ln()).abs() < 1e-9);
        let crt = solve_alpha(&ScalingLaw::sqrt_dirichlet_half(), 1e-10).unwrap();
        assert!((crt - 2.0).abs() < 1e-9);
    }

    #[test]
    fn alpha_errors() {
        let all_ones = ScalingLaw::DiscreteIID {
            atoms: vec![(1.0, 1.0)],
        };
        assert!(matches!(solve_alpha(&all_ones, 1e-10), Err(Error::Condition(_))));
        let big = ScalingLaw::Deterministic {
            r1: 0.9,
            r2: 0.9,
            r3: 0.999,
        };
        assert!(solve_alpha(&big, 1e-10).unwrap() > 1.0);
        assert!(matches!(mean_sum_theta(&big, 0.0, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn martingale_trivial_cases() {
        let h = CascadeHandle::new(5, ScalingLaw::uniform());
        assert_eq!(martingale(&h, 2.0, 0).unwrap().value, 1.0);
        let h = CascadeHandle::new(5, ScalingLaw::halves());
        let alpha = 3f64.ln() / 2f64.ln();
        for n in 0..6 {
            let v = martingale(&h, alpha, n).unwrap().value;
            assert!((v - 1.0).abs() < 1e-12);
        }
        let tight = CascadeHandle::new(5, ScalingLaw::uniform()).with_budget(Budget {
            max_nodes: 100,
            max_edges: 100,
        });
        assert!(matches!(martingale(&tight, 2.0, 5), Err(Error::Budget { .. })));
    }

    #[test]
    fn condition_checks() {
        assert!(check_condition_a(&ScalingLaw::uniform()));
        assert!(!check_condition_a(&ScalingLaw::Deterministic {
            r1: 0.5,
            r2: 0.6,
            r3: 0.5
        }));
        assert!(check_condition_b(&ScalingLaw::unit_atom(0.2)));
        assert!(!check_condition_b(&ScalingLaw::unit_atom(0.4)));
        let c = check_condition_c(&ScalingLaw::uniform(), 0.1, &default_x_grid()).unwrap();
        assert!(c.holds);
        assert!((c.epsilon - 0.1).abs() < 1e-15);
        let c = check_condition_c(&ScalingLaw::LogTailIID, 0.05, &default_x_grid()).unwrap();
        assert!(!c.holds);
        assert!(matches!(
            check_condition_c(&ScalingLaw::sqrt_dirichlet_half(), 0.1, &default_x_grid()),
            Err(Error::Unsupported(_))
        ));
    }
}
