//! Distribution families for the sibling triple `(w(1), w(2), w(3))`.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta as BetaDist, ContinuousCDF};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a discrete law.
const DISCRETE_MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum ScalingLaw {
    /// Fixed ratios; the classical self-similar case.
    Deterministic { r1: f64, r2: f64, r3: f64 },
    /// Three independent `U(lo, hi)` factors.
    UniformIID { lo: f64, hi: f64 },
    /// Square roots of a Dirichlet(a1, a2, a3) triple.
    SqrtDirichlet { a1: f64, a2: f64, a3: f64 },
    /// Three independent `Beta(a, b)` factors.
    BetaIID { a: f64, b: f64 },
    /// Three independent factors with finitely many atoms `(value, probability)`.
    DiscreteIID { atoms: Vec<(f64, f64)> },
    /// `w1 ~ U(lo, hi)`, `w2 = 1 - w1`, `w3 ~ U(lo, hi)` independent of `w1`.
    BoundedPairPlusOne { lo: f64, hi: f64 },
    /// Three independent factors with distribution function `1 / (1 - ln x)` on
    /// `(0, 1]`. Too much mass near zero for the lower-tail condition.
    LogTailIID,
}

impl ScalingLaw {
    pub fn uniform() -> Self {
        ScalingLaw::UniformIID { lo: 0.0, hi: 1.0 }
    }

    pub fn halves() -> Self {
        ScalingLaw::Deterministic {
            r1: 0.5,
            r2: 0.5,
            r3: 0.5,
        }
    }

    pub fn sqrt_dirichlet_half() -> Self {
        ScalingLaw::SqrtDirichlet {
            a1: 0.5,
            a2: 0.5,
            a3: 0.5,
        }
    }

    /// Two-atom law putting mass `q` on 1 and `1 - q` on 1/2.
    pub fn unit_atom(q: f64) -> Self {
        ScalingLaw::DiscreteIID {
            atoms: vec![(1.0, q), (0.5, 1.0 - q)],
        }
    }

    /// Parses either a JSON object `{"family": .., "params": ..}` or one of the
    /// preset names `uniform`, `crt`, `halves`, `bounded`, `logtail`.
    pub fn from_arg(arg: &str) -> Result<Self> {
        let arg = arg.trim();
        let law = match arg {
            "uniform" => Self::uniform(),
            "crt" => Self::sqrt_dirichlet_half(),
            "halves" => Self::halves(),
            "bounded" => ScalingLaw::BoundedPairPlusOne { lo: 0.2, hi: 0.8 },
            "logtail" => ScalingLaw::LogTailIID,
            _ => serde_json::from_str(arg)
                .map_err(|e| Error::Parse(format!("law: {e}")))?,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::validation("law.params", m));
        match self {
            ScalingLaw::Deterministic { r1, r2, r3 } => {
                if [r1, r2, r3].iter().any(|r| !(r.is_finite() && **r > 0.0)) {
                    return bad("deterministic ratios must be positive and finite".into());
                }
            }
            ScalingLaw::UniformIID { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && hi > lo) {
                    return bad(format!("need 0 <= lo < hi, got lo={lo}, hi={hi}"));
                }
            }
            ScalingLaw::SqrtDirichlet { a1, a2, a3 } => {
                if [a1, a2, a3].iter().any(|a| !(a.is_finite() && **a > 0.0)) {
                    return bad("Dirichlet parameters must be positive".into());
                }
            }
            ScalingLaw::BetaIID { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return bad("Beta parameters must be positive".into());
                }
            }
            ScalingLaw::DiscreteIID { atoms } => {
                if atoms.is_empty() {
                    return bad("discrete law needs at least one atom".into());
                }
                if atoms
                    .iter()
                    .any(|(v, p)| !(v.is_finite() && *v > 0.0 && p.is_finite() && *p >= 0.0))
                {
                    return bad("atoms need positive values and nonnegative probabilities".into());
                }
                let total: f64 = atoms.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > DISCRETE_MASS_TOL {
                    return bad(format!("atom probabilities sum to {total}, not 1"));
                }
            }
            ScalingLaw::BoundedPairPlusOne { lo, hi } => {
                if !(*lo > 0.0 && hi > lo && *hi < 1.0) {
                    return bad(format!("need 0 < lo < hi < 1, got lo={lo}, hi={hi}"));
                }
            }
            ScalingLaw::LogTailIID => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalingLaw::Deterministic { .. } => "Deterministic",
            ScalingLaw::UniformIID { .. } => "UniformIID",
            ScalingLaw::SqrtDirichlet { .. } => "SqrtDirichlet",
            ScalingLaw::BetaIID { .. } => "BetaIID",
            ScalingLaw::DiscreteIID { .. } => "DiscreteIID",
            ScalingLaw::BoundedPairPlusOne { .. } => "BoundedPairPlusOne",
            ScalingLaw::LogTailIID => "LogTailIID",
        }
    }

    /// Whether the three coordinates are mutually independent.
    pub fn independent_coordinates(&self) -> bool {
        !matches!(
            self,
            ScalingLaw::SqrtDirichlet { .. } | ScalingLaw::BoundedPairPlusOne { .. }
        )
    }

    pub fn is_degenerate(&self) -> bool {
        match self {
            ScalingLaw::Deterministic { .. } => true,
            ScalingLaw::DiscreteIID { atoms } => atoms.iter().filter(|(_, p)| *p > 0.0).count() <= 1,
            _ => false,
        }
    }

    pub fn support_in_unit(&self) -> bool {
        match self {
            ScalingLaw::Deterministic { r1, r2, r3 } => [r1, r2, r3].iter().all(|r| **r <= 1.0),
            ScalingLaw::UniformIID { hi, .. } => *hi <= 1.0,
            ScalingLaw::DiscreteIID { atoms } => atoms.iter().all(|(v, p)| *p == 0.0 || *v <= 1.0),
            _ => true,
        }
    }

    /// Draws one sibling triple.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        match self {
            ScalingLaw::Deterministic { r1, r2, r3 } => [*r1, *r2, *r3],
            ScalingLaw::UniformIID { lo, hi } => {
                let span = hi - lo;
                [
                    lo + span * open01(rng),
                    lo + span * open01(rng),
                    lo + span * open01(rng),
                ]
            }
            ScalingLaw::SqrtDirichlet { a1, a2, a3 } => {
                let g = [a1, a2, a3].map(|a| {
                    Gamma::new(*a, 1.0)
                        .expect("validated shape")
                        .sample(rng)
                        .max(f64::MIN_POSITIVE)
                });
                let total: f64 = g.iter().sum();
                g.map(|x| (x / total).sqrt())
            }
            ScalingLaw::BetaIID { a, b } => {
                let d = Beta::new(*a, *b).expect("validated shape");
                [0, 1, 2].map(|_| d.sample(rng).max(f64::MIN_POSITIVE))
            }
            ScalingLaw::DiscreteIID { atoms } => {
                self.sample_atoms(rng).expect("discrete").map(|k| atoms[k].0)
            }
            ScalingLaw::BoundedPairPlusOne { lo, hi } => {
                let span = hi - lo;
                let w1 = lo + span * open01(rng);
                let w3 = lo + span * open01(rng);
                [w1, 1.0 - w1, w3]
            }
            ScalingLaw::LogTailIID => [0, 1, 2].map(|_| log_tail_quantile(open01(rng))),
        }
    }

    /// Atom indices for a discrete law, drawn with the same randomness that
    /// [`ScalingLaw::sample`] consumes.
    pub fn sample_atoms<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<[usize; 3]> {
        let ScalingLaw::DiscreteIID { atoms } = self else {
            return None;
        };
        let mut pick = || {
            let u = open01(rng);
            let mut acc = 0.0;
            for (k, (_, p)) in atoms.iter().enumerate() {
                acc += p;
                if u < acc {
                    return k;
                }
            }
            // Rounding in the cumulative sum: fall back to the last atom with mass.
            atoms.iter().rposition(|(_, p)| *p > 0.0).unwrap_or(0)
        };
        Some([pick(), pick(), pick()])
    }

    /// Indices of atoms sitting exactly at 1, decided once from the stored law.
    pub fn unit_atoms(&self) -> Vec<usize> {
        match self {
            ScalingLaw::DiscreteIID { atoms } => atoms
                .iter()
                .enumerate()
                .filter(|(_, (v, _))| *v == 1.0)
                .map(|(k, _)| k)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// `Σ_k P(w(k) = 1)`.
    pub fn unit_mass(&self) -> f64 {
        match self {
            ScalingLaw::Deterministic { r1, r2, r3 } => {
                [r1, r2, r3].iter().filter(|r| ***r == 1.0).count() as f64
            }
            ScalingLaw::DiscreteIID { atoms } => {
                3.0 * self.unit_atoms().iter().map(|&k| atoms[k].1).sum::<f64>()
            }
            _ => 0.0,
        }
    }

    /// `E w(k)^θ` for coordinate `k` in `0..3`, when available in closed form.
    pub fn coordinate_moment(&self, k: usize, theta: f64) -> Option<f64> {
        assert!(k < 3, "coordinate index {k} out of range");
        let uniform_moment = |lo: f64, hi: f64| {
            (hi.powf(theta + 1.0) - lo.powf(theta + 1.0)) / ((theta + 1.0) * (hi - lo))
        };
        match self {
            ScalingLaw::Deterministic { r1, r2, r3 } => Some([r1, r2, r3][k].powf(theta)),
            ScalingLaw::UniformIID { lo, hi } => Some(uniform_moment(*lo, *hi)),
            ScalingLaw::SqrtDirichlet { a1, a2, a3 } => {
                // w_k^2 ~ Beta(a_k, A - a_k), so E w_k^θ is a Beta moment of order θ/2.
                let a = [a1, a2, a3][k];
                let total = a1 + a2 + a3;
                let h = theta / 2.0;
                Some((ln_gamma(a + h) + ln_gamma(total) - ln_gamma(*a) - ln_gamma(total + h)).exp())
            }
            ScalingLaw::BetaIID { a, b } => Some((ln_beta(a + theta, *b) - ln_beta(*a, *b)).exp()),
            ScalingLaw::DiscreteIID { atoms } => {
                Some(atoms.iter().map(|(v, p)| p * v.powf(theta)).sum())
            }
            ScalingLaw::BoundedPairPlusOne { lo, hi } => match k {
                1 => Some(uniform_moment(1.0 - hi, 1.0 - lo)),
                _ => Some(uniform_moment(*lo, *hi)),
            },
            ScalingLaw::LogTailIID => None,
        }
    }

    /// `F(θ) = E Σ_k w(k)^θ` in closed form, if the family has one.
    pub fn f_theta_exact(&self, theta: f64) -> Option<f64> {
        (0..3).map(|k| self.coordinate_moment(k, theta)).sum()
    }

    /// Marginal distribution function of coordinate `k`.
    pub fn coordinate_cdf(&self, k: usize, x: f64) -> Option<f64> {
        match self {
            ScalingLaw::Deterministic { r1, r2, r3 } => {
                Some(if x >= *[r1, r2, r3][k] { 1.0 } else { 0.0 })
            }
            ScalingLaw::UniformIID { lo, hi } => Some(((x - lo) / (hi - lo)).clamp(0.0, 1.0)),
            ScalingLaw::BetaIID { a, b } => {
                let d = BetaDist::new(*a, *b).ok()?;
                Some(d.cdf(x.clamp(0.0, 1.0)))
            }
            ScalingLaw::DiscreteIID { atoms } => Some(
                atoms
                    .iter()
                    .filter(|(v, _)| *v <= x)
                    .map(|(_, p)| p)
                    .sum::<f64>()
                    .min(1.0),
            ),
            ScalingLaw::BoundedPairPlusOne { lo, hi } => {
                let (lo, hi) = if k == 1 { (1.0 - hi, 1.0 - lo) } else { (*lo, *hi) };
                Some(((x - lo) / (hi - lo)).clamp(0.0, 1.0))
            }
            ScalingLaw::LogTailIID => Some(if x <= 0.0 {
                0.0
            } else if x >= 1.0 {
                1.0
            } else {
                1.0 / (1.0 - x.ln())
            }),
            ScalingLaw::SqrtDirichlet { a1, a2, a3 } => {
                let a = *[a1, a2, a3][k];
                let d = BetaDist::new(a, a1 + a2 + a3 - a).ok()?;
                Some(d.cdf((x * x).clamp(0.0, 1.0)))
            }
        }
    }

    /// Draws coordinate `k` conditioned on `w(k) <= x`. `None` when the law has
    /// no mass below `x` or the family has no usable quantile function.
    pub fn sample_coordinate_below<R: Rng + ?Sized>(
        &self,
        k: usize,
        x: f64,
        rng: &mut R,
    ) -> Option<f64> {
        let mass = self.coordinate_cdf(k, x)?;
        if mass <= 0.0 {
            return None;
        }
        let v = open01(rng) * mass;
        match self {
            ScalingLaw::UniformIID { lo, hi } => Some(lo + v * (hi - lo)),
            ScalingLaw::BetaIID { a, b } => {
                let d = BetaDist::new(*a, *b).ok()?;
                Some(d.inverse_cdf(v).max(f64::MIN_POSITIVE))
            }
            ScalingLaw::DiscreteIID { atoms } => {
                let mut acc = 0.0;
                let mut last = None;
                for (value, p) in atoms.iter().filter(|(value, _)| *value <= x) {
                    acc += p;
                    last = Some(*value);
                    if v < acc {
                        return Some(*value);
                    }
                }
                last
            }
            ScalingLaw::LogTailIID => Some(log_tail_quantile(v)),
            _ => None,
        }
    }
}

#[inline]
fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    crate::rng::to_open01(rng.next_u64())
}

fn log_tail_quantile(u: f64) -> f64 {
    (1.0 - 1.0 / u).exp().max(f64::MIN_POSITIVE)
}
