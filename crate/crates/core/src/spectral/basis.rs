//! The critical basis `Φ = [cos ωθ, sin ωθ]`, its rotation group and the
//! adjoint normalization that yields Ψ̃.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::functional::LinearFunctional;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// `e^{tB}` for `B = [[0, ω], [−ω, 0]]`, parametrized by the phase `ωt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub cos: f64,
    pub sin: f64,
}

impl Rotation {
    /// Phase reduced modulo 2π before the trigonometric evaluation.
    pub fn from_phase(phase: f64) -> Self {
        let (sin, cos) = phase.rem_euclid(TAU).sin_cos();
        Self { cos, sin }
    }

    pub fn at(omega: f64, t: f64) -> Self {
        Self::from_phase(omega * t)
    }

    /// `e^{tB} v`.
    pub fn apply(&self, v: Vec2) -> Vec2 {
        [self.cos * v[0] + self.sin * v[1], -self.sin * v[0] + self.cos * v[1]]
    }

    /// `e^{−tB} v`.
    pub fn apply_inverse(&self, v: Vec2) -> Vec2 {
        [self.cos * v[0] - self.sin * v[1], self.sin * v[0] + self.cos * v[1]]
    }
}

pub fn generator(omega: f64) -> Mat2 {
    [[0.0, omega], [-omega, 0.0]]
}

/// `Φ(θ) z`.
pub fn phi_dot(omega: f64, theta: f64, z: Vec2) -> f64 {
    let (s, c) = (omega * theta).sin_cos();
    c * z[0] + s * z[1]
}

/// `sup_{θ∈[−r,0]} |Φ(θ) u|` in closed form.
pub fn phi_sup_norm(omega: f64, r: f64, u: Vec2) -> f64 {
    let amp = u[0].hypot(u[1]);
    if amp == 0.0 {
        return 0.0;
    }
    // Φ(θ)u = amp·cos(ωθ − φ); |cos| peaks where ωθ − φ ∈ πℤ.
    let phi = u[1].atan2(u[0]);
    let lo = -omega * r - phi;
    let hi = -phi;
    if (hi / std::f64::consts::PI).floor() >= (lo / std::f64::consts::PI).ceil() {
        return amp;
    }
    (amp * lo.cos()).abs().max((amp * hi.cos()).abs())
}

pub fn norm2(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

pub fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn invert(m: &Mat2) -> Result<Mat2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if !(det.abs() > 1e-12 * scale * scale) {
        return Err(Error::SingularNormalization { det });
    }
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

/// `∫_θ^0 v_i(ξ − θ) Φ_j(ξ) dξ` with `v(s) = [cos ωs, sin ωs]`.
fn atom_block(omega: f64, theta: f64) -> Mat2 {
    let len = -theta;
    let (s, c) = (omega * theta).sin_cos();
    let cc = 0.5 * (len * c - s / omega);
    let cs = 0.5 * len * s;
    let ss = 0.5 * (len * c + s / omega);
    [[cc, cs], [-cs, ss]]
}

/// Bilinear form of the adjoint basis against Φ:
/// `N = v(0)Φ(0) + Σ c_k ∫_{θ_k}^0 v(ξ − θ_k) Φ(ξ) dξ`.
pub fn normalization_matrix(l0: &LinearFunctional, omega: f64) -> Mat2 {
    let mut n = [[1.0, 0.0], [0.0, 0.0]];
    for atom in l0.atoms() {
        let block = atom_block(omega, atom.theta);
        for i in 0..2 {
            for j in 0..2 {
                n[i][j] += atom.weight * block[i][j];
            }
        }
    }
    n
}

/// Critical-plane coordinates of `1_{0}`: `Ψ̃ = N⁻¹ v(0)`.
pub fn compute_psi_tilde(l0: &LinearFunctional, omega: f64) -> Result<Vec2> {
    let inv = invert(&normalization_matrix(l0, omega))?;
    Ok([inv[0][0], inv[1][0]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn rotation_matches_matrix_exponential_series() {
        let omega = 1.3;
        let t = 0.7;
        let b = generator(omega);
        // Truncated Taylor series of e^{tB}.
        let mut term = [[1.0, 0.0], [0.0, 1.0]];
        let mut sum = term;
        for k in 1..40 {
            let mut next = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = (0..2).map(|m| term[i][m] * b[m][j]).sum::<f64>() * t / k as f64;
                }
            }
            term = next;
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        let rot = Rotation::at(omega, t);
        for v in [[1.0, 0.0], [0.0, 1.0]] {
            let got = rot.apply(v);
            let want = mat_vec(&sum, v);
            assert!((got[0] - want[0]).abs() < 1e-14 && (got[1] - want[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn semigroup_shift_of_basis() {
        // (T(t)Φ)(θ) = Φ(t + θ) = Φ(θ)e^{tB}.
        let omega = FRAC_PI_2;
        let z = [0.3, -1.1];
        for (t, th) in [(0.4, -0.9), (2.5, -0.1), (7.0, 0.0)] {
            let lhs = phi_dot(omega, t + th, z);
            let rhs = phi_dot(omega, th, Rotation::at(omega, t).apply(z));
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn closed_form_psi_tilde() {
        let l0 = LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap();
        let psi = compute_psi_tilde(&l0, FRAC_PI_2).unwrap();
        let k = 2.0 / (1.0 + FRAC_PI_2 * FRAC_PI_2);
        assert!((psi[0] - k).abs() < 1e-14);
        assert!((psi[1] - k * FRAC_PI_2).abs() < 1e-14);
        let n = normalization_matrix(&l0, FRAC_PI_2);
        assert!((n[0][0] - 0.5).abs() < 1e-15 && (n[0][1] - PI / 4.0).abs() < 1e-15);
        assert!((n[1][0] + PI / 4.0).abs() < 1e-15 && (n[1][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sup_norm_of_basis_combination() {
        let omega = FRAC_PI_2;
        let brute =
            |u: Vec2, r: f64| (0..=20000).map(|i| phi_dot(omega, -r * i as f64 / 20000.0, u).abs()).fold(0.0, f64::max);
        for u in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8], [-2.0, 0.3]] {
            for r in [0.3, 1.0, 2.5] {
                assert!((phi_sup_norm(omega, r, u) - brute(u, r)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        assert!(matches!(invert(&[[1.0, 2.0], [2.0, 4.0]]), Err(Error::SingularNormalization { .. })));
    }
}
