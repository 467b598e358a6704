//! Deterministic initial segments ξ on `[-r, 0]`.

use std::f64::consts::TAU;

/// An initial segment in unscaled delay time θ ∈ [-r, 0].
///
/// `PointMass` is the discontinuous `1_{0}`: 1 at θ = 0, 0 elsewhere. All
/// other variants are continuous.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSegment {
    /// `Φ(θ)z + offset` with `Φ = [cos ωθ, sin ωθ]`.
    Harmonic {
        omega: f64,
        z: [f64; 2],
        offset: f64,
    },
    Linear {
        slope: f64,
        intercept: f64,
    },
    PointMass,
}

impl InitialSegment {
    pub fn constant(value: f64) -> Self {
        Self::Harmonic { omega: TAU, z: [0.0, 0.0], offset: value }
    }

    /// `amplitude · cos(ωθ)`, the initial condition of the ensemble experiments.
    pub fn cosine(omega: f64, amplitude: f64) -> Self {
        Self::Harmonic { omega, z: [amplitude, 0.0], offset: 0.0 }
    }

    pub fn value(&self, theta: f64) -> f64 {
        match *self {
            Self::Harmonic { omega, z, offset } => {
                let (s, c) = (omega * theta).sin_cos();
                z[0] * c + z[1] * s + offset
            }
            Self::Linear { slope, intercept } => slope * theta + intercept,
            Self::PointMass => {
                if theta == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `lim_{θ→0⁻} ξ(θ)`; differs from `value(0)` only for `PointMass`.
    pub fn left_limit_at_zero(&self) -> f64 {
        match self {
            Self::PointMass => 0.0,
            _ => self.value(0.0),
        }
    }

    /// `ξ(θ)` for θ < 0 extended by its left limit at 0.
    pub fn past(&self, theta: f64) -> f64 {
        if theta >= 0.0 {
            self.left_limit_at_zero()
        } else {
            self.value(theta)
        }
    }
}
