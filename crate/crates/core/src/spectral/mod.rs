//! Spectral analysis of the unperturbed linear DDE `ẋ = L₀(Π_t x)`.

mod basis;
mod decay;
mod projection;
mod roots;

pub use basis::{
    compute_psi_tilde, generator, invert, mat_vec, norm2, normalization_matrix, phi_dot, phi_sup_norm, Mat2, Rotation,
    Vec2,
};
pub use decay::{fit_decay, gamma_table, DecayFit, GammaTable};
pub use projection::Projector;
pub use roots::{
    characteristic_derivative, characteristic_value, find_roots, verify_criticality, winding_count, CriticalityReport,
    Region, CLUSTER_TOL, CRITICALITY_TOL, ROOT_TOL,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functional::LinearFunctional;

/// Knobs for [`CriticalPair::analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOptions {
    pub region: Option<Region>,
    pub grid_density: usize,
    pub tol: f64,
    /// γ is tabulated on `[0, gamma_periods·r]` with step `r/gamma_cells`.
    pub gamma_periods: f64,
    pub gamma_cells: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { region: None, grid_density: 8, tol: CRITICALITY_TOL, gamma_periods: 10.0, gamma_cells: 400 }
    }
}

/// Everything the reduction needs about a critical `L₀`.
#[derive(Debug, Clone)]
pub struct CriticalPair {
    pub l0: LinearFunctional,
    pub omega: f64,
    pub psi_tilde: Vec2,
    pub normalization: Mat2,
    /// `−max Re` over the non-critical roots in the search region.
    pub gap: f64,
    pub decay: DecayFit,
    pub roots: Vec<Complex64>,
    pub region: Region,
    pub gamma: GammaTable,
}

/// Roots plus classification, available whether or not `L₀` is critical.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub roots: Vec<Complex64>,
    pub region: Region,
    pub report: CriticalityReport,
}

pub fn analyze_spectrum(l0: &LinearFunctional, opts: &SpectralOptions) -> Result<SpectralSummary> {
    let region = opts.region.unwrap_or_else(|| Region::default_for_delay(l0.max_delay()));
    let roots = find_roots(l0, &region, opts.grid_density)?;
    let report = verify_criticality(&roots, &region, opts.tol)?;
    Ok(SpectralSummary { roots, region, report })
}

impl CriticalPair {
    pub fn analyze(l0: &LinearFunctional, opts: &SpectralOptions) -> Result<Self> {
        if l0.is_zero() {
            return Err(Error::DegenerateFunctional);
        }
        let summary = analyze_spectrum(l0, opts)?;
        Self::from_summary(l0, summary, opts)
    }

    pub fn from_summary(l0: &LinearFunctional, summary: SpectralSummary, opts: &SpectralOptions) -> Result<Self> {
        let SpectralSummary { roots, region, report } = summary;
        let Some(omega) = report.omega_c.filter(|_| report.is_critical) else {
            return Err(Error::NotCritical(format!("rightmost non-critical root has real part {:.6}", -report.gap)));
        };
        let normalization = normalization_matrix(l0, omega);
        let psi_tilde = compute_psi_tilde(l0, omega)?;
        let r = l0.max_delay();
        let gamma = gamma_table(l0, omega, psi_tilde, opts.gamma_periods * r, r / opts.gamma_cells as f64)?;
        let decay = fit_decay(&gamma.times, &gamma.values, 2.0 * r)?;
        Ok(Self { l0: l0.clone(), omega, psi_tilde, normalization, gap: report.gap, decay, roots, region, gamma })
    }

    pub fn max_delay(&self) -> f64 {
        self.l0.max_delay()
    }

    pub fn generator(&self) -> Mat2 {
        generator(self.omega)
    }

    /// Fast rotation period `2π/ω`.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }

    pub fn projector(&self, cells: usize) -> Result<Projector> {
        Projector::new(&self.l0, self.omega, cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn example_pair() {
        let l0 = LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap();
        let pair = CriticalPair::analyze(&l0, &SpectralOptions::default()).unwrap();
        assert!((pair.omega - FRAC_PI_2).abs() < 1e-10);
        assert!((pair.gap - 1.604290913448011).abs() < 1e-8);
        assert!((pair.gamma.values[0] - (1.0 - pair.psi_tilde[0])).abs() < 1e-12);
        assert!(pair.decay.kappa > 0.0);
        assert!((pair.decay.kappa / pair.gap - 1.0).abs() < 0.2);
    }

    #[test]
    fn non_critical_is_rejected() {
        let l0 = LinearFunctional::point(1.0, -1.0, -1.0).unwrap();
        assert!(matches!(CriticalPair::analyze(&l0, &SpectralOptions::default()), Err(Error::NotCritical(_))));
        let zero = LinearFunctional::zero(1.0).unwrap();
        assert_eq!(CriticalPair::analyze(&zero, &SpectralOptions::default()).unwrap_err(), Error::DegenerateFunctional);
    }
}
