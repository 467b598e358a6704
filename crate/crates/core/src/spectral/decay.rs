//! The stable part γ of the fundamental solution and its exponential envelope.

use super::basis::{Rotation, Vec2};
use crate::dde::solve_linear_dde;
use crate::error::{Error, Result};
use crate::functional::LinearFunctional;

#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// `γ(t) = x(t) − Φ(0)e^{tB}Ψ̃`, x the solution started from `1_{0}`.
pub fn gamma_table(l0: &LinearFunctional, omega: f64, psi_tilde: Vec2, t_max: f64, dt: f64) -> Result<GammaTable> {
    let r = l0.max_delay();
    if !(dt > 0.0 && dt <= r / 50.0 * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!("gamma step {dt} must lie in (0, r/50]")));
    }
    if !(t_max >= 10.0 * r * (1.0 - 1e-12)) {
        return Err(Error::InvalidArgument(format!("gamma horizon {t_max} is below 10r")));
    }
    let x = solve_linear_dde(l0, |_| 0.0, 1.0, dt, t_max)?;
    let times: Vec<f64> = x.times().collect();
    let values = times.iter().zip(x.values()).map(|(&t, &v)| v - Rotation::at(omega, t).apply(psi_tilde)[0]).collect();
    Ok(GammaTable { times, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub k: f64,
    pub kappa: f64,
    /// Largest relative deviation of the fitted line from the fit points.
    pub residual: f64,
}

impl DecayFit {
    pub fn envelope(&self, t: f64) -> f64 {
        self.k * (-self.kappa * t).exp()
    }
}

/// Least-squares envelope `K e^{−κt}` for `|values|` on the tail `t ≥ t0`.
///
/// The line is fitted through the local maxima of `|values|` in the tail,
/// falling back to every positive tail sample when fewer than three maxima
/// exist. K is then raised until the envelope covers every sample given.
pub fn fit_decay(times: &[f64], values: &[f64], t0: f64) -> Result<DecayFit> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::InvalidArgument("times and values must be non-empty and equal in length".into()));
    }
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let tail: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= t0).collect();
    let peaks: Vec<usize> = tail
        .iter()
        .copied()
        .filter(|&i| i > 0 && i + 1 < abs.len() && abs[i] > abs[i - 1] && abs[i] >= abs[i + 1])
        .collect();
    let points: Vec<(f64, f64)> = if peaks.len() >= 3 { peaks } else { tail }
        .into_iter()
        .filter(|&i| abs[i] > 0.0)
        .map(|i| (times[i], abs[i].ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::InvalidArgument("fewer than two positive tail samples".into()));
    }
    let line = least_squares(&points);
    let kappa = -line.0;
    if !(kappa > 0.0) {
        return Err(Error::NonDecaying { kappa });
    }
    let k_fit = line.1.exp();
    let residual =
        points.iter().map(|&(t, ly)| (ly.exp() / (k_fit * (-kappa * t).exp()) - 1.0).abs()).fold(0.0, f64::max);
    let k = times
        .iter()
        .zip(&abs)
        .map(|(&t, &a)| a * (kappa * t).exp())
        .fold(k_fit, f64::max)
        // margin for the rounding of exp(κt)·exp(−κt)
        * (1.0 + 1e-12);
    Ok(DecayFit { k, kappa, residual })
}

/// `(slope, intercept)` of the least-squares line.
fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
