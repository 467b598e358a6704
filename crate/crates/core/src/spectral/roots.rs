//! Roots of the characteristic function `Δ(λ) = λ − L₀(e^{λ·})`.
//!
//! Newton's method from a grid of starting points finds candidate roots; an
//! argument-principle winding count along the region boundary certifies
//! that none were missed.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functional::LinearFunctional;

pub const ROOT_TOL: f64 = 1e-10;
pub const CLUSTER_TOL: f64 = 1e-6;
pub const CRITICALITY_TOL: f64 = 1e-8;

/// `λ − L₀(θ ↦ e^{λθ})`.
pub fn characteristic_value(l0: &LinearFunctional, lambda: Complex64) -> Complex64 {
    lambda - l0.atoms().map(|a| a.weight * (lambda * a.theta).exp()).sum::<Complex64>()
}

/// `Δ'(λ) = 1 − Σ c θ e^{λθ}`.
pub fn characteristic_derivative(l0: &LinearFunctional, lambda: Complex64) -> Complex64 {
    Complex64::new(1.0, 0.0) - l0.atoms().map(|a| a.weight * a.theta * (lambda * a.theta).exp()).sum::<Complex64>()
}

/// Closed rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Self {
        Self { re_min: re.0, re_max: re.1, im_min: im.0, im_max: im.1 }
    }

    /// Re ∈ [−4π/r, 0.5], |Im| ≤ 6π/r.
    pub fn default_for_delay(r: f64) -> Self {
        Self::new((-4.0 * PI / r, 0.5), (-6.0 * PI / r, 6.0 * PI / r))
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re_min - slack
            && z.re <= self.re_max + slack
            && z.im >= self.im_min - slack
            && z.im <= self.im_max + slack
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn is_valid(&self) -> bool {
        [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite())
            && self.re_min < self.re_max
            && self.im_min < self.im_max
    }
}

/// Number of zeros of Δ inside `region`, by the argument principle.
pub fn winding_count(l0: &LinearFunctional, region: &Region) -> Result<usize> {
    if !region.is_valid() {
        return Err(Error::InvalidArgument(format!("degenerate region {region:?}")));
    }
    let corners = region.corners();
    let mut total = 0.0;
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        let pieces = (((b - a).norm() * 8.0).ceil() as usize).max(16);
        let mut prev_z = a;
        let mut prev_f = boundary_value(l0, a)?;
        for p in 1..=pieces {
            let z = a + (b - a) * (p as f64 / pieces as f64);
            let f = boundary_value(l0, z)?;
            total += arg_change(l0, prev_z, prev_f, z, f, 0)?;
            prev_z = z;
            prev_f = f;
        }
    }
    let turns = total / TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.05 || rounded < 0.0 {
        return Err(Error::InvalidArgument(format!("winding number {turns} is not an integer")));
    }
    Ok(rounded as usize)
}

fn boundary_value(l0: &LinearFunctional, z: Complex64) -> Result<Complex64> {
    let f = characteristic_value(l0, z);
    let distance = f.norm() / characteristic_derivative(l0, z).norm().max(1.0);
    if distance < 1e-8 * (1.0 + z.norm()) {
        return Err(Error::ContourThroughRoot { re: z.re, im: z.im, distance });
    }
    Ok(f)
}

/// Phase increment of Δ from `za` to `zb`, bisecting until each piece turns
/// by less than a quarter radian.
fn arg_change(
    l0: &LinearFunctional,
    za: Complex64,
    fa: Complex64,
    zb: Complex64,
    fb: Complex64,
    depth: usize,
) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() < 0.25 || depth > 40 {
        return Ok(d);
    }
    let zm = (za + zb) * 0.5;
    let fm = boundary_value(l0, zm)?;
    Ok(arg_change(l0, za, fa, zm, fm, depth + 1)? + arg_change(l0, zm, fm, zb, fb, depth + 1)?)
}

fn newton(l0: &LinearFunctional, start: Complex64) -> Option<Complex64> {
    let mut z = start;
    for _ in 0..60 {
        let f = characteristic_value(l0, z);
        let df = characteristic_derivative(l0, z);
        if df.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        let step = f / df;
        z -= step;
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    // Two polishing iterations after the stopping test.
    for _ in 0..2 {
        let df = characteristic_derivative(l0, z);
        if df.norm() > 0.0 {
            z -= characteristic_value(l0, z) / df;
        }
    }
    (characteristic_value(l0, z).norm() < ROOT_TOL).then_some(z)
}

/// All roots of Δ inside `region`.
///
/// Starts Newton from a grid with `grid_density` points per 2π/r; on a
/// shortfall against the winding count the grid is refined twice before
/// giving up with [`Error::WindingMismatch`]. Roots are sorted by
/// decreasing real part, then increasing imaginary part.
pub fn find_roots(l0: &LinearFunctional, region: &Region, grid_density: usize) -> Result<Vec<Complex64>> {
    if grid_density < 8 {
        return Err(Error::InvalidArgument(format!("grid density {grid_density} is below 8 points per root spacing")));
    }
    let winding = winding_count(l0, region)?;
    let mut found = Vec::new();
    let mut density = grid_density;
    for _ in 0..3 {
        found = newton_sweep(l0, region, density);
        if found.len() >= winding {
            break;
        }
        density *= 2;
    }
    if found.len() != winding {
        return Err(Error::WindingMismatch { winding, found: found.len() });
    }
    Ok(found)
}

fn newton_sweep(l0: &LinearFunctional, region: &Region, density: usize) -> Vec<Complex64> {
    let spacing = TAU / l0.max_delay() / density as f64;
    let nx = ((region.re_max - region.re_min) / spacing).ceil() as usize + 1;
    let ny = ((region.im_max - region.im_min) / spacing).ceil() as usize + 1;
    let mut roots: Vec<Complex64> = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let start = Complex64::new(
                region.re_min + (region.re_max - region.re_min) * i as f64 / (nx - 1).max(1) as f64,
                region.im_min + (region.im_max - region.im_min) * j as f64 / (ny - 1).max(1) as f64,
            );
            let Some(root) = newton(l0, start) else { continue };
            if !region.contains(root, 0.0) {
                continue;
            }
            if roots.iter().all(|r| (r - root).norm() > CLUSTER_TOL) {
                roots.push(root);
            }
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    roots
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityReport {
    pub is_critical: bool,
    pub omega_c: Option<f64>,
    /// `−max Re` over the non-critical roots.
    pub gap: f64,
}

/// Decide whether exactly one conjugate pair sits on the imaginary axis and
/// everything else found in `region` is strictly stable.
pub fn verify_criticality(roots: &[Complex64], region: &Region, tol: f64) -> Result<CriticalityReport> {
    if region.re_max < tol || region.re_min > -tol {
        return Err(Error::InconclusiveRegion(format!(
            "real extent [{}, {}] does not straddle the imaginary axis",
            region.re_min, region.re_max
        )));
    }
    let on_axis: Vec<&Complex64> = roots.iter().filter(|z| z.re.abs() < tol && z.im.abs() > tol).collect();
    let pair = match on_axis.as_slice() {
        [a, b] if (a.im + b.im).abs() < tol.max(CLUSTER_TOL) => Some(a.im.abs()),
        _ => None,
    };
    let rest: Vec<&Complex64> = if pair.is_some() {
        roots.iter().filter(|z| !(z.re.abs() < tol && z.im.abs() > tol)).collect()
    } else {
        roots.iter().collect()
    };
    let Some(max_re) = rest.iter().map(|z| z.re).max_by(f64::total_cmp) else {
        return Err(Error::InconclusiveRegion("no non-critical roots inside the region; extend it to the left".into()));
    };
    let is_critical = pair.is_some() && max_re < -tol;
    Ok(CriticalityReport { is_critical, omega_c: if is_critical { pair } else { None }, gap: -max_re })
}
