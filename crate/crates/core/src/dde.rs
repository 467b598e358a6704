//! Method of steps for the unperturbed linear DDE `ẋ(t) = L₀(Π_t x)`.
//!
//! Classical RK4 on a uniform grid with cubic Hermite dense output for the
//! delayed lookups. Within one step every delayed argument is read from a
//! single history cell, taken from the left, so derivative jumps that sit
//! on grid points (the breaking points of a grid-aligned delay) never
//! pollute a step. The initial history is supplied as its left-continuous
//! past plus the value at 0, which lets `1_{0}` be solved exactly.

use crate::error::{Error, Result};
use crate::functional::LinearFunctional;

const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DdeSolution {
    step: f64,
    values: Vec<f64>,
    slope_left: Vec<f64>,
    slope_right: Vec<f64>,
}

impl DdeSolution {
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Grid values `x(k·step)`, k = 0, 1, ….
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.step)
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    /// Dense output on `[0, horizon]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let cells = self.values.len() - 1;
        let pos = (t / self.step).clamp(0.0, cells as f64);
        let j = (pos.floor() as usize).min(cells.saturating_sub(1));
        if cells == 0 {
            return self.values[0];
        }
        self.hermite(j, pos - j as f64)
    }

    fn hermite(&self, j: usize, s: f64) -> f64 {
        let (x0, x1) = (self.values[j], self.values[j + 1]);
        let (m0, m1) = (self.slope_left[j] * self.step, self.slope_right[j] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * x0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * x1 + (s3 - s2) * m1
    }
}

/// Solve `ẋ = L₀(Π_t x)` on `[0, t_max]` with step `step`.
///
/// `past(θ)` gives the history for θ ∈ [-r, 0) and its left limit at 0;
/// `x0` is the value at t = 0. Atoms with a positive delay shorter than the
/// step are rejected.
pub fn solve_linear_dde(
    l0: &LinearFunctional,
    past: impl Fn(f64) -> f64,
    x0: f64,
    step: f64,
    t_max: f64,
) -> Result<DdeSolution> {
    if !(step > 0.0 && step.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need step > 0 and t_max >= 0, got step = {step}, t_max = {t_max}"
        )));
    }
    let mut instant = 0.0;
    let mut delayed = Vec::new();
    for atom in l0.atoms() {
        let d = -atom.theta;
        if d == 0.0 {
            instant += atom.weight;
        } else if d < step * (1.0 - ALIGN_TOL) {
            return Err(Error::InvalidArgument(format!("delay {d} is shorter than the step {step}")));
        } else {
            delayed.push((d, atom.weight));
        }
    }

    let n_steps = (t_max / step - ALIGN_TOL).ceil().max(0.0) as usize;
    let mut sol = DdeSolution {
        step,
        values: Vec::with_capacity(n_steps + 1),
        slope_left: Vec::with_capacity(n_steps),
        slope_right: Vec::with_capacity(n_steps),
    };
    sol.values.push(x0);

    for k in 0..n_steps {
        let tk = k as f64 * step;
        // Delayed contribution at stage fractions 0, 1/2, 1.
        let mut lag = [0.0; 3];
        for &(d, c) in &delayed {
            let base = (tk - d) / step;
            let rounded = base.round();
            let aligned = (base - rounded).abs() < ALIGN_TOL;
            for (slot, alpha) in [0.0, 0.5, 1.0].into_iter().enumerate() {
                let (cell, s) = if aligned {
                    (rounded as i64, alpha)
                } else {
                    let pos = base + alpha;
                    let mut cell = pos.floor() as i64;
                    let mut s = pos - cell as f64;
                    if s < ALIGN_TOL && cell as usize >= k && cell > 0 {
                        cell -= 1;
                        s = 1.0;
                    }
                    (cell, s)
                };
                let x =
                    if cell < 0 { past(((cell as f64 + s) * step).min(0.0)) } else { sol.hermite(cell as usize, s) };
                lag[slot] += c * x;
            }
        }
        let xk = sol.values[k];
        let f = |slot: usize, x: f64| instant * x + lag[slot];
        let k1 = f(0, xk);
        let k2 = f(1, xk + 0.5 * step * k1);
        let k3 = f(1, xk + 0.5 * step * k2);
        let k4 = f(2, xk + step * k3);
        let next = xk + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        sol.values.push(next);
        sol.slope_left.push(k1);
        sol.slope_right.push(f(2, next));
    }
    Ok(sol)
}
