//! Bounded linear functionals on the segment space `C([-r, 0])`.
//!
//! Every functional handled here is a finite signed measure made of point
//! masses plus the jumps of a piecewise-constant Stieltjes function. A
//! piecewise-constant cumulative function only charges its breakpoints, so
//! both parts reduce to atoms and integrals become exact finite sums.

use crate::error::{Error, Result};

/// Tolerance used when checking that an atom lies inside `[-r, 0]`.
const SUPPORT_SLACK: f64 = 1e-12;

/// A weighted point of a measure on `[-r, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub theta: f64,
    pub weight: f64,
}

impl Atom {
    pub fn new(theta: f64, weight: f64) -> Self {
        Self { theta, weight }
    }
}

/// Signed measure `η ↦ Σ c_k η(θ_k) + ∫ η dν` with ν piecewise constant.
///
/// `jumps` hold the Stieltjes part as (breakpoint, jump) pairs, where the
/// jump is `ν(θ+) − ν(θ)` for the normalized, left-continuous ν with
/// `ν(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional {
    max_delay: f64,
    point_masses: Vec<Atom>,
    jumps: Vec<Atom>,
}

impl LinearFunctional {
    pub fn new(max_delay: f64, point_masses: Vec<Atom>, jumps: Vec<Atom>) -> Result<Self> {
        if !(max_delay.is_finite() && max_delay > 0.0) {
            return Err(Error::InvalidFunctional(format!("max delay must be positive and finite, got {max_delay}")));
        }
        for atom in point_masses.iter().chain(&jumps) {
            if !atom.theta.is_finite() || !atom.weight.is_finite() {
                return Err(Error::InvalidFunctional(format!("non-finite atom {atom:?}")));
            }
            if atom.theta > SUPPORT_SLACK || atom.theta < -max_delay - SUPPORT_SLACK {
                return Err(Error::InvalidFunctional(format!(
                    "atom at θ = {} lies outside [-{max_delay}, 0]",
                    atom.theta
                )));
            }
        }
        let clamp = |a: Atom| Atom::new(a.theta.clamp(-max_delay, 0.0), a.weight);
        Ok(Self {
            max_delay,
            point_masses: point_masses.into_iter().map(clamp).collect(),
            jumps: jumps.into_iter().map(clamp).collect(),
        })
    }

    /// The zero functional on `C([-r, 0])`.
    pub fn zero(max_delay: f64) -> Result<Self> {
        Self::new(max_delay, Vec::new(), Vec::new())
    }

    /// `η ↦ weight · η(theta)`.
    pub fn point(max_delay: f64, theta: f64, weight: f64) -> Result<Self> {
        Self::new(max_delay, vec![Atom::new(theta, weight)], Vec::new())
    }

    pub fn max_delay(&self) -> f64 {
        self.max_delay
    }

    pub fn point_masses(&self) -> &[Atom] {
        &self.point_masses
    }

    pub fn jumps(&self) -> &[Atom] {
        &self.jumps
    }

    /// All atoms of the measure, point masses first.
    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.point_masses.iter().chain(&self.jumps).copied()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms().all(|a| a.weight == 0.0)
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms().map(|a| a.weight.abs()).sum()
    }

    /// Value on the constant segment `η ≡ 1`.
    pub fn total_mass(&self) -> f64 {
        self.atoms().map(|a| a.weight).sum()
    }

    /// Smallest nonzero delay among the atoms, if any.
    pub fn min_positive_delay(&self) -> Option<f64> {
        self.atoms().map(|a| -a.theta).filter(|&d| d > 0.0).min_by(|a, b| a.total_cmp(b))
    }

    pub fn apply(&self, segment: impl Fn(f64) -> f64) -> f64 {
        self.atoms().map(|a| a.weight * segment(a.theta)).sum()
    }

    /// `∫ η(θ)^power dν(θ)`.
    pub fn apply_pow(&self, segment: impl Fn(f64) -> f64, power: i32) -> f64 {
        self.atoms().map(|a| a.weight * segment(a.theta).powi(power)).sum()
    }

    /// `a·self + b·other`, defined on the larger of the two delay windows.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        let scale = |atoms: &[Atom], s: f64| atoms.iter().map(|x| Atom::new(x.theta, s * x.weight)).collect::<Vec<_>>();
        let mut points = scale(&self.point_masses, a);
        points.extend(scale(&other.point_masses, b));
        let mut jumps = scale(&self.jumps, a);
        jumps.extend(scale(&other.jumps, b));
        Self::new(self.max_delay.max(other.max_delay), points, jumps)
    }
}

/// `G(η) = ∫ η dν₁ + ∫ η³ dν₃`.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    pub nu1: LinearFunctional,
    pub nu3: LinearFunctional,
    /// Global Lipschitz bound K_G, required by the multiplicative case.
    pub lipschitz: Option<f64>,
}

impl Nonlinearity {
    pub fn zero(max_delay: f64) -> Result<Self> {
        Ok(Self {
            nu1: LinearFunctional::zero(max_delay)?,
            nu3: LinearFunctional::zero(max_delay)?,
            lipschitz: Some(0.0),
        })
    }

    /// Linear plus cubic parts; the Lipschitz bound is `‖ν₁‖` when ν₃ vanishes.
    pub fn new(nu1: LinearFunctional, nu3: LinearFunctional) -> Self {
        let lipschitz = nu3.is_zero().then(|| nu1.total_variation());
        Self { nu1, nu3, lipschitz }
    }

    /// Multiplicative-noise systems need a globally Lipschitz G, so no cubic part.
    pub fn check_lipschitz(&self) -> Result<()> {
        if self.nu3.is_zero() {
            Ok(())
        } else {
            Err(Error::InvalidFunctional("multiplicative noise requires a globally Lipschitz G (empty ν₃)".into()))
        }
    }

    pub fn eval(&self, segment: impl Fn(f64) -> f64) -> f64 {
        self.nu1.apply(&segment) + self.nu3.apply_pow(&segment, 3)
    }

    pub fn is_zero(&self) -> bool {
        self.nu1.is_zero() && self.nu3.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn constant_segment_gives_total_mass() {
        let f =
            LinearFunctional::new(2.0, vec![Atom::new(-1.0, 0.5), Atom::new(0.0, -2.0)], vec![Atom::new(-1.5, 0.25)])
                .unwrap();
        assert_eq!(f.apply(|_| 1.0), f.total_mass());
        assert_eq!(f.total_mass(), -1.25);
        assert_eq!(f.total_variation(), 2.75);
        assert_eq!(f.min_positive_delay(), Some(1.0));
    }

    #[test]
    fn rejects_atoms_outside_window() {
        assert!(LinearFunctional::point(1.0, -1.5, 1.0).is_err());
        assert!(LinearFunctional::point(1.0, 0.1, 1.0).is_err());
        assert!(LinearFunctional::point(0.0, 0.0, 1.0).is_err());
        assert!(LinearFunctional::point(1.0, -0.5, f64::NAN).is_err());
    }

    #[test]
    fn cubic_power() {
        let g = LinearFunctional::point(1.0, -1.0, 3.0).unwrap();
        assert_eq!(g.apply_pow(|_| 2.0, 3), 24.0);
        let l0 = LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap();
        assert_eq!(l0.apply(|_| 2.0), -FRAC_PI_2 * 2.0);
    }

    #[test]
    fn multiplicative_requires_no_cubic_part() {
        let nu1 = LinearFunctional::point(1.0, -1.0, 0.3).unwrap();
        let nu3 = LinearFunctional::point(1.0, -1.0, 1.0).unwrap();
        assert!(Nonlinearity::new(nu1.clone(), LinearFunctional::zero(1.0).unwrap()).check_lipschitz().is_ok());
        let g = Nonlinearity::new(nu1, nu3);
        assert!(g.check_lipschitz().is_err());
        assert_eq!(g.lipschitz, None);
    }
}
