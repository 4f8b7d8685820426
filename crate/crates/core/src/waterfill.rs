//! Reverse water-filling over one period of a memoryless WSCS Gaussian
//! source.
//!
//! For per-component variances `sigma^2_m`, `m = 0..N_p`, the RDF is
//!
//! ```text
//! R(D) = 1/(2 N_p) * sum_m log2(sigma^2_m / D_m),   D_m = min(sigma^2_m, theta)
//! ```
//!
//! with the water level `theta` chosen so that `(1/N_p) sum_m D_m = D`.
//! When `D` reaches the mean variance the rate is zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::compensated_sum;
use crate::variance::DtVariancePeriod;

/// Default relative tolerance on the achieved distortion.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterfillSolution {
    /// Water level.
    pub theta: f64,
    /// `D_m = min(sigma^2_m, theta)`.
    pub per_component_d: Vec<f64>,
    /// Bits per sample.
    pub rate_bits: f64,
    /// `(1/N_p) sum_m D_m`.
    pub achieved_d: f64,
}

/// `(1/N_p) sum_m min(sigma^2_m, theta)`.
pub fn distortion_from_theta(variances: &DtVariancePeriod, theta: f64) -> f64 {
    let theta = theta.max(0.0);
    compensated_sum(variances.as_slice().iter().map(|&s| s.min(theta))) / variances.period() as f64
}

fn rate_bits(variances: &[f64], per_component_d: &[f64]) -> f64 {
    let total = compensated_sum(
        variances
            .iter()
            .zip(per_component_d)
            .map(|(&s, &d)| if d >= s { 0.0 } else { (s / d).log2() }),
    );
    total / (2.0 * variances.len() as f64)
}

/// Finds the water level meeting distortion `d` by bisection and evaluates
/// the rate.
pub fn solve_reverse_waterfill(variances: &DtVariancePeriod, d: f64, tol: f64) -> Result<WaterfillSolution> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain(format!("distortion D = {d} must be positive and finite")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    let sigma = variances.as_slice();
    if d >= variances.mean() {
        return Ok(WaterfillSolution {
            theta: d,
            per_component_d: sigma.to_vec(),
            rate_bits: 0.0,
            achieved_d: variances.mean(),
        });
    }

    // distortion(theta) <= theta, so the root lies in [d, max sigma^2].
    let (mut lo, mut hi) = (d, variances.max());
    let mut theta = lo;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        theta = 0.5 * (lo + hi);
        let achieved = distortion_from_theta(variances, theta);
        if (achieved - d).abs() <= tol * d {
            converged = true;
            break;
        }
        if achieved < d {
            lo = theta;
        } else {
            hi = theta;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "water level bisection did not reach tolerance {tol} within {MAX_ITERATIONS} iterations"
        )));
    }

    let per_component_d: Vec<f64> = sigma.iter().map(|&s| s.min(theta)).collect();
    let achieved_d = compensated_sum(per_component_d.iter().copied()) / sigma.len() as f64;
    let rate = rate_bits(sigma, &per_component_d);
    Ok(WaterfillSolution { theta, per_component_d, rate_bits: rate, achieved_d })
}

/// Re-evaluates the rate of `solution` against `variances`.
pub fn rate_from_solution(variances: &DtVariancePeriod, solution: &WaterfillSolution) -> Result<f64> {
    if solution.per_component_d.len() != variances.period() {
        return Err(Error::Domain(format!(
            "solution has {} components, variance period has {}",
            solution.per_component_d.len(),
            variances.period()
        )));
    }
    if let Some(m) = solution
        .per_component_d
        .iter()
        .zip(variances.as_slice())
        .position(|(&d, &s)| !(d > 0.0 && d <= s))
    {
        return Err(Error::Domain(format!("component {m} has D_m outside (0, sigma^2_m]")));
    }
    Ok(rate_bits(variances.as_slice(), &solution.per_component_d))
}
