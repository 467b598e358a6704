//! The averaged one-dimensional amplitude equation for `ℋ = ½‖z‖₂²`.

use crate::error::{Error, Result};
use crate::functional::{LinearFunctional, Nonlinearity};
use crate::spectral::{phi_dot, CriticalPair, Mat2, Rotation, Vec2};
use crate::wiener::WienerPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Quadrature,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::Quadrature => "quadrature",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diffusion {
    /// `c·H`
    Linear(f64),
    /// `c·√H`
    SqrtH(f64),
}

/// `dℋ = (c₀ + c₁ℋ + c₂ℋ²)dt + diffusion(ℋ)dW`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSde {
    pub drift_coeffs: [f64; 3],
    pub diffusion: Diffusion,
    pub provenance: Provenance,
}

impl AmplitudeSde {
    pub fn drift(&self, h: f64) -> f64 {
        let [c0, c1, c2] = self.drift_coeffs;
        c0 + h * (c1 + h * c2)
    }

    pub fn diffusion(&self, h: f64) -> f64 {
        match self.diffusion {
            Diffusion::Linear(c) => c * h,
            Diffusion::SqrtH(c) => c * h.max(0.0).sqrt(),
        }
    }

    pub fn diffusion_coeff(&self) -> f64 {
        match self.diffusion {
            Diffusion::Linear(c) | Diffusion::SqrtH(c) => c,
        }
    }

    /// Geometric Brownian motion `dℋ = C₁ℋdW + C₂ℋdt`.
    pub fn is_geometric(&self) -> bool {
        matches!(self.diffusion, Diffusion::Linear(_)) && self.drift_coeffs[0] == 0.0 && self.drift_coeffs[2] == 0.0
    }

    pub fn is_zero(&self) -> bool {
        self.drift_coeffs.iter().all(|c| *c == 0.0) && self.diffusion_coeff() == 0.0
    }
}

/// `2C₁² = 3(M₁₁² + M₂₂²) + (M₁₂ + M₂₁)² + 2M₁₁M₂₂`, `C₂ = ½ΣM_ij²`.
pub fn averaged_multiplicative_coeffs(m: &Mat2) -> Result<(f64, f64)> {
    let two_c1_sq = 3.0 * (m[0][0].powi(2) + m[1][1].powi(2)) + (m[0][1] + m[1][0]).powi(2) + 2.0 * m[0][0] * m[1][1];
    if two_c1_sq < 0.0 {
        return Err(Error::NegativeVariance(two_c1_sq));
    }
    let c2 = 0.5 * m.iter().flatten().map(|x| x * x).sum::<f64>();
    Ok(((0.5 * two_c1_sq).sqrt(), c2))
}

/// `L₁Φ = [L₁(cos ω·), L₁(sin ω·)]`.
pub fn apply_to_basis(l: &LinearFunctional, omega: f64) -> Vec2 {
    [l.apply(|th| (omega * th).cos()), l.apply(|th| (omega * th).sin())]
}

/// `M = Ψ̃(L₁Φ)`.
pub fn multiplicative_matrix(psi: Vec2, l1: &LinearFunctional, omega: f64) -> Mat2 {
    let l = apply_to_basis(l1, omega);
    [[psi[0] * l[0], psi[0] * l[1]], [psi[1] * l[0], psi[1] * l[1]]]
}

/// Averaged equation of the multiplicative system with `G = 0`.
pub fn averaged_multiplicative_from_operators(psi: Vec2, l1: &LinearFunctional, pair: &CriticalPair) -> AmplitudeSde {
    let l = apply_to_basis(l1, pair.omega);
    let psi_sq = psi[0] * psi[0] + psi[1] * psi[1];
    let l_sq = l[0] * l[0] + l[1] * l[1];
    let dot = l[0] * psi[0] + l[1] * psi[1];
    let c2 = 0.5 * psi_sq * l_sq;
    AmplitudeSde {
        drift_coeffs: [0.0, c2, 0.0],
        diffusion: Diffusion::Linear((c2 + dot * dot).sqrt()),
        provenance: Provenance::ClosedForm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub period_points: usize,
    pub directions: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { period_points: 256, directions: 64, rel_tol: 1e-6 }
    }
}

/// Mean over one period of `(e^{tB}z)·Ψ̃ · ∫(Φe^{tB}z)^p dν`.
fn period_average(pair: &CriticalPair, nu: &LinearFunctional, power: i32, z: Vec2, points: usize) -> f64 {
    let sum: f64 = (0..points)
        .map(|i| {
            let u = Rotation::from_phase(std::f64::consts::TAU * i as f64 / points as f64).apply(z);
            let proj = u[0] * pair.psi_tilde[0] + u[1] * pair.psi_tilde[1];
            proj * nu.apply_pow(|th| phi_dot(pair.omega, th, u), power)
        })
        .sum();
    sum / points as f64
}

/// Direction-averaged period mean over the unit circle.
fn circle_average(pair: &CriticalPair, nu: &LinearFunctional, power: i32, opts: &QuadratureOptions) -> f64 {
    let d = opts.directions.max(1);
    (0..d)
        .map(|j| {
            let a = std::f64::consts::TAU * j as f64 / d as f64;
            period_average(pair, nu, power, [a.cos(), a.sin()], opts.period_points)
        })
        .sum::<f64>()
        / d as f64
}

/// `(ω/2π)∫₀^{2π/ω} (e^{tB}z)·Ψ̃ ∫(Φe^{tB}z)³dν₃ dt`.
pub fn stabilizing_integral(pair: &CriticalPair, nu3: &LinearFunctional, z: Vec2, points: usize) -> f64 {
    period_average(pair, nu3, 3, z, points)
}

fn additive_coefficients(pair: &CriticalPair, g: &Nonlinearity, sigma: f64, opts: &QuadratureOptions) -> [f64; 4] {
    let psi_sq = pair.psi_tilde[0].powi(2) + pair.psi_tilde[1].powi(2);
    // Degree-2 and degree-4 homogeneity: on ‖z‖₂² = 2H the averages scale by 2H and 4H².
    [
        0.5 * psi_sq * sigma * sigma,
        2.0 * circle_average(pair, &g.nu1, 1, opts),
        4.0 * circle_average(pair, &g.nu3, 3, opts),
        sigma.abs() * psi_sq.sqrt(),
    ]
}

/// Averaged equation of the additive system, by period averaging.
pub fn averaged_additive(
    pair: &CriticalPair,
    g: &Nonlinearity,
    sigma: f64,
    opts: &QuadratureOptions,
) -> Result<AmplitudeSde> {
    let coarse = additive_coefficients(pair, g, sigma, opts);
    let fine_opts = QuadratureOptions { period_points: 2 * opts.period_points, ..*opts };
    let fine = additive_coefficients(pair, g, sigma, &fine_opts);
    let scale = fine.iter().map(|c| c.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let change = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
    if change > opts.rel_tol {
        return Err(Error::QuadratureNonConverged { change, tol: opts.rel_tol });
    }
    Ok(AmplitudeSde {
        drift_coeffs: [fine[0], fine[1], fine[2]],
        diffusion: Diffusion::SqrtH(fine[3]),
        provenance: Provenance::Quadrature,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizingReport {
    pub stabilizing: bool,
    /// `−max` of the period average over unit directions.
    pub c_g_hat: f64,
}

pub fn check_stabilizing(pair: &CriticalPair, nu3: &LinearFunctional, opts: &QuadratureOptions) -> StabilizingReport {
    let d = opts.directions.max(1);
    let max = (0..d)
        .map(|j| {
            let a = std::f64::consts::TAU * j as f64 / d as f64;
            stabilizing_integral(pair, nu3, [a.cos(), a.sin()], opts.period_points)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    StabilizingReport { stabilizing: max < 0.0, c_g_hat: -max }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudePath {
    pub dt: f64,
    pub stride: usize,
    /// Every `stride`-th step, plus the last one.
    pub values: Vec<f64>,
    /// Time of the last recorded value.
    pub last_time: f64,
    /// Time at which the path overflowed, if it did.
    pub overflow: Option<f64>,
}

impl AmplitudePath {
    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = (0..self.values.len()).map(|k| (k * self.stride) as f64 * self.dt).collect();
        if let Some(last) = t.last_mut() {
            *last = self.last_time;
        }
        t
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("path starts with h0")
    }
}

/// Integrate ℋ⁰ from `h0` over `[0, horizon]`.
///
/// Geometric equations use the exact log-space update; everything else is
/// Euler–Maruyama reflected at 0. `observer(t, H)` sees every step.
pub fn simulate_h0_with(
    sde: &AmplitudeSde,
    h0: f64,
    horizon: f64,
    w: &WienerPath,
    record_every: usize,
    mut observer: impl FnMut(f64, f64),
) -> Result<AmplitudePath> {
    if !(h0 >= 0.0 && h0.is_finite()) {
        return Err(Error::InvalidArgument(format!("initial amplitude must be >= 0, got {h0}")));
    }
    let dt = w.dt();
    let n_steps = (horizon / dt - 1e-9).ceil().max(0.0) as u64;
    let stride = record_every.max(1);
    let mut values = vec![h0];
    let mut noise = w.stream(1);
    let mut h = h0;
    let mut overflow = None;
    let mut last_time = 0.0;
    observer(0.0, h);
    let geometric = sde.is_geometric();
    let (c1, c2) = (sde.diffusion_coeff(), sde.drift_coeffs[1]);
    for k in 1..=n_steps {
        let dw = noise.next_increment();
        h = if geometric {
            h * ((c2 - 0.5 * c1 * c1) * dt + c1 * dw).exp()
        } else {
            (h + sde.drift(h) * dt + sde.diffusion(h) * dw).abs()
        };
        let t = k as f64 * dt;
        if !h.is_finite() {
            overflow = Some(t);
            break;
        }
        observer(t, h);
        if (k as usize).is_multiple_of(stride) || k == n_steps {
            values.push(h);
            last_time = t;
        }
    }
    Ok(AmplitudePath { dt, stride, values, last_time, overflow })
}

pub fn simulate_h0(
    sde: &AmplitudeSde,
    h0: f64,
    horizon: f64,
    w: &WienerPath,
    record_every: usize,
) -> Result<AmplitudePath> {
    simulate_h0_with(sde, h0, horizon, w, record_every, |_, _| {})
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExitTime {
    Hit(f64),
    Censored(f64),
}

impl ExitTime {
    /// Time value, with censored times reported at the horizon.
    pub fn value(self) -> f64 {
        match self {
            ExitTime::Hit(t) | ExitTime::Censored(t) => t,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, ExitTime::Censored(_))
    }
}

/// Online first-passage detector for `value ≥ threshold`, refining the
/// crossing by linear interpolation between grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitDetector {
    threshold: f64,
    prev: Option<(f64, f64)>,
    hit: Option<f64>,
}

impl ExitDetector {
    pub fn new(threshold: f64) -> Self {
        Self { threshold, prev: None, hit: None }
    }

    pub fn observe(&mut self, t: f64, value: f64) {
        if self.hit.is_some() {
            return;
        }
        if value >= self.threshold {
            self.hit = Some(match self.prev {
                Some((t0, v0)) if value > v0 => t0 + (t - t0) * (self.threshold - v0) / (value - v0),
                _ => t,
            });
        }
        self.prev = Some((t, value));
    }

    pub fn hit(&self) -> Option<f64> {
        self.hit
    }

    pub fn finish(&self, horizon: f64) -> ExitTime {
        self.hit.map_or(ExitTime::Censored(horizon), ExitTime::Hit)
    }
}

/// First passage of a time-ordered series over `threshold`.
pub fn exit_time(times: &[f64], values: &[f64], threshold: f64, horizon: f64) -> ExitTime {
    let mut det = ExitDetector::new(threshold);
    for (t, v) in times.iter().zip(values) {
        det.observe(*t, *v);
        if det.hit().is_some() {
            break;
        }
    }
    det.finish(horizon)
}
