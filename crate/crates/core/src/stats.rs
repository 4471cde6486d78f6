//! Regression, tail fits and summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean and standard error of the mean; the stderr is 0 for fewer than 2 values.
pub fn mean_stderr<I: IntoIterator<Item = f64>>(values: I) -> (f64, f64) {
    // Welford keeps the variance stable for long Monte Carlo runs.
    let (mut n, mut mean, mut m2) = (0u64, 0.0f64, 0.0f64);
    for v in values {
        n += 1;
        let d = v - mean;
        mean += d / n as f64;
        m2 += d * (v - mean);
    }
    if n < 2 {
        return (mean, 0.0);
    }
    let var = m2 / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(values: &[f64]) -> f64 {
    let (_, se) = mean_stderr(values.iter().copied());
    se * (values.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub r2: f64,
    pub n: usize,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LineFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Statistical(format!("line fit needs at least 3 points, got {n}")));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Statistical("line fit got a non-finite point".into()));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) * nf {
        return Err(Error::Statistical("line fit x values are degenerate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        .max(0.0);
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(LineFit {
        slope,
        intercept,
        stderr,
        r2,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// `log P(S > t)` against `t`; rate is minus the slope.
    Survival,
    /// `log(-log P(S <= x))` against `log(1/x)`; rate estimates γ.
    LeftTail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub mode: TailMode,
    pub rate: f64,
    pub r2: f64,
    pub stderr: f64,
    pub thresholds: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Minimum number of exceedances (or left-tail hits) for a threshold to enter the fit.
pub const MIN_TAIL_COUNT: usize = 20;
const MIN_TAIL_SAMPLES: usize = 100;

/// Fits an exponential-type tail. Thresholds with fewer than
/// [`MIN_TAIL_COUNT`] relevant samples, or with empirical probability 1,
/// are dropped; at least 3 must remain.
pub fn tail_fit(samples: &[f64], thresholds: &[f64], mode: TailMode) -> Result<TailFit> {
    let n = samples.len();
    if n < MIN_TAIL_SAMPLES {
        return Err(Error::Statistical(format!(
            "tail fit needs at least {MIN_TAIL_SAMPLES} samples, got {n}"
        )));
    }
    let mut used = Vec::new();
    let mut counts = Vec::new();
    let mut points = Vec::new();
    for &t in thresholds {
        let (count, point) = match mode {
            TailMode::Survival => {
                let c = samples.iter().filter(|&&s| s > t).count();
                (c, (t, (c as f64 / n as f64).ln()))
            }
            TailMode::LeftTail => {
                if !(t > 0.0) {
                    continue;
                }
                let c = samples.iter().filter(|&&s| s <= t).count();
                let prob = c as f64 / n as f64;
                (c, ((1.0 / t).ln(), (-prob.ln()).ln()))
            }
        };
        if count >= MIN_TAIL_COUNT && count < n {
            used.push(t);
            counts.push(count);
            points.push(point);
        }
    }
    if points.len() < 3 {
        return Err(Error::Statistical(format!(
            "tail fit has {} usable thresholds (need 3 with at least {MIN_TAIL_COUNT} counts): {:?}",
            points.len(),
            used
        )));
    }
    let fit = fit_line(&points)?;
    let rate = match mode {
        TailMode::Survival => -fit.slope,
        TailMode::LeftTail => fit.slope,
    };
    Ok(TailFit {
        mode,
        rate,
        r2: fit.r2,
        stderr: fit.stderr,
        thresholds: used,
        counts,
    })
}

/// Leave-one-out jackknife of a statistic over `n` groups.
pub fn jackknife<F: FnMut(usize) -> Option<f64>>(n: usize, mut stat_without: F) -> Option<f64> {
    if n < 2 {
        return Some(0.0);
    }
    let vals: Vec<f64> = (0..n).map(&mut stat_without).collect::<Option<Vec<_>>>()?;
    let mean = vals.iter().sum::<f64>() / n as f64;
    let ss: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum();
    Some(((n as f64 - 1.0) / n as f64 * ss).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|x| (x as f64, 2.0 * x as f64 + 1.0)).collect();
        let fit = fit_line(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curved_points_have_spread() {
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)];
        let fit = fit_line(&pts).unwrap();
        assert!(fit.stderr > 0.0);
        assert!(fit.r2 < 1.0);
    }

    #[test]
    fn degenerate_x_rejected() {
        assert!(fit_line(&[(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(fit_line(&[(1.0, 0.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn log_geometric_line() {
        let pts: Vec<(f64, f64)> = (1..8)
            .map(|n| (n as f64, (3f64.powi(n) * 2f64.powi(-2 * n)).ln()))
            .collect();
        let fit = fit_line(&pts).unwrap();
        assert!((fit.slope - (0.75f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn geometric_survival() {
        // Sizes with P(S > n) = 2^{-n} exactly for n = 0..10.
        let mut samples = Vec::new();
        for k in 1..=11 {
            let copies = 1usize << (11 - k);
            samples.extend(std::iter::repeat(k as f64).take(copies));
        }
        samples.push(12.0);
        let thresholds: Vec<f64> = (0..7).map(|t| t as f64).collect();
        let fit = tail_fit(&samples, &thresholds, TailMode::Survival);
        let fit = fit.unwrap_or_else(|e| panic!("{e}"));
        assert!((fit.rate - 2f64.ln()).abs() < 1e-12, "{}", fit.rate);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_have_no_tail() {
        let samples = vec![3.0; 500];
        let err = tail_fit(&samples, &[1.0, 2.0, 3.0, 4.0], TailMode::Survival).unwrap_err();
        assert!(matches!(err, Error::Statistical(_)));
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        let (m, se) = mean_stderr([2.0; 10]);
        assert_eq!((m, se), (2.0, 0.0));
    }
}
