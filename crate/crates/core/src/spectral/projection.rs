//! Projection of a sampled segment onto the critical plane.
//!
//! The bilinear form is integrated against a piecewise cubic interpolant
//! of the samples with four Gauss–Legendre points per cell, which keeps
//! the coordinates accurate to O(h⁴) on smooth segments. The weights are
//! computed once per grid.

use super::basis::{invert, mat_vec, phi_dot, Mat2, Vec2};
use crate::error::{Error, Result};
use crate::functional::LinearFunctional;

const GL_NODES: [f64; 4] =
    [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL_WEIGHTS: [f64; 4] =
    [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// Projector for segments sampled on `θ_j = −r + j·r/n`, j = 0..=n.
#[derive(Debug, Clone)]
pub struct Projector {
    omega: f64,
    max_delay: f64,
    cells: usize,
    weights: Vec<Vec2>,
    inverse: Mat2,
    basis: Vec<Vec2>,
}

impl Projector {
    pub fn new(l0: &LinearFunctional, omega: f64, cells: usize) -> Result<Self> {
        if cells < 3 {
            return Err(Error::InvalidArgument(format!("projection grid needs at least 3 cells, got {cells}")));
        }
        let r = l0.max_delay();
        let h = r / cells as f64;
        let mut weights = vec![[0.0; 2]; cells + 1];
        weights[cells][0] += 1.0;
        for atom in l0.atoms() {
            if atom.theta >= 0.0 || atom.weight == 0.0 {
                continue;
            }
            let start = (atom.theta + r) / h;
            let first = (start.floor() as usize).min(cells - 1);
            for cell in first..cells {
                let a = (cell as f64 * h - r).max(atom.theta);
                let b = (cell + 1) as f64 * h - r;
                if b <= a {
                    continue;
                }
                let s = cell.saturating_sub(1).min(cells - 3);
                let half = 0.5 * (b - a);
                for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                    let xi = a + half * (1.0 + x);
                    let (vs, vc) = (omega * (xi - atom.theta)).sin_cos();
                    let u = (xi + r) / h - s as f64;
                    for (m, l) in lagrange4(u).into_iter().enumerate() {
                        let f = atom.weight * w * half * l;
                        weights[s + m][0] += f * vc;
                        weights[s + m][1] += f * vs;
                    }
                }
            }
        }
        let basis: Vec<Vec2> = (0..=cells)
            .map(|j| {
                let (sn, cs) = (omega * (j as f64 * h - r)).sin_cos();
                [cs, sn]
            })
            .collect();
        // Discrete normalization: makes Φz project back to z up to rounding.
        let mut gram = [[0.0; 2]; 2];
        for (w, p) in weights.iter().zip(&basis) {
            for i in 0..2 {
                for j in 0..2 {
                    gram[i][j] += w[i] * p[j];
                }
            }
        }
        let inverse = invert(&gram)?;
        Ok(Self { omega, max_delay: r, cells, weights, inverse, basis })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn max_delay(&self) -> f64 {
        self.max_delay
    }

    /// Critical coordinates of the segment with grid values `samples`.
    pub fn coordinates(&self, samples: &[f64]) -> Result<Vec2> {
        self.check_len(samples.len())?;
        let mut acc = [0.0; 2];
        for (w, x) in self.weights.iter().zip(samples) {
            acc[0] += w[0] * x;
            acc[1] += w[1] * x;
        }
        Ok(mat_vec(&self.inverse, acc))
    }

    /// `(z, y)` with `y_j = samples_j − Φ(θ_j) z`.
    pub fn project(&self, samples: &[f64]) -> Result<(Vec2, Vec<f64>)> {
        let z = self.coordinates(samples)?;
        let y = samples.iter().zip(&self.basis).map(|(x, p)| x - p[0] * z[0] - p[1] * z[1]).collect();
        Ok((z, y))
    }

    /// `(z, sup_j |y_j|)` without allocating the remainder.
    pub fn project_norm(&self, samples: &[f64]) -> Result<(Vec2, f64)> {
        let z = self.coordinates(samples)?;
        let norm =
            samples.iter().zip(&self.basis).map(|(x, p)| (x - p[0] * z[0] - p[1] * z[1]).abs()).fold(0.0, f64::max);
        Ok((z, norm))
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.max_delay / self.cells as f64;
        (0..=self.cells).map(move |j| j as f64 * h - self.max_delay)
    }

    /// Samples of `Φ z` on the grid.
    pub fn basis_samples(&self, z: Vec2) -> Vec<f64> {
        self.grid().map(|th| phi_dot(self.omega, th, z)).collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.cells + 1 {
            return Err(Error::InvalidArgument(format!(
                "segment has {len} samples, projector expects {}",
                self.cells + 1
            )));
        }
        Ok(())
    }
}

fn lagrange4(u: f64) -> [f64; 4] {
    let (a, b, c, d) = (u, u - 1.0, u - 2.0, u - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::basis::compute_psi_tilde;
    use std::f64::consts::FRAC_PI_2;

    fn example() -> LinearFunctional {
        LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap()
    }

    #[test]
    fn cosine_projects_to_first_axis() {
        let p = Projector::new(&example(), FRAC_PI_2, 1000).unwrap();
        let seg = p.basis_samples([1.0, 0.0]);
        let (z, y) = p.project(&seg).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12 && z[1].abs() < 1e-12);
        assert!(y.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn zero_segment() {
        let p = Projector::new(&example(), FRAC_PI_2, 64).unwrap();
        let (z, y) = p.project(&vec![0.0; 65]).unwrap();
        assert_eq!(z, [0.0, 0.0]);
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn point_mass_converges_to_psi_tilde() {
        let psi = compute_psi_tilde(&example(), FRAC_PI_2).unwrap();
        let mut prev = f64::INFINITY;
        for n in [50, 200, 800, 3200] {
            let p = Projector::new(&example(), FRAC_PI_2, n).unwrap();
            let mut seg = vec![0.0; n + 1];
            seg[n] = 1.0;
            let z = p.coordinates(&seg).unwrap();
            let err = (z[0] - psi[0]).hypot(z[1] - psi[1]);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 2e-3);
    }

    #[test]
    fn smooth_segment_is_fourth_order() {
        // Exact coordinates of an off-plane segment from a very fine grid.
        let seg = |th: f64| (2.0 * th).exp() + th * th;
        let coords = |n: usize| {
            let p = Projector::new(&example(), FRAC_PI_2, n).unwrap();
            let s: Vec<f64> = p.grid().map(seg).collect();
            p.coordinates(&s).unwrap()
        };
        let exact = coords(4096);
        let e1 = (coords(32)[0] - exact[0]).abs();
        let e2 = (coords(64)[0] - exact[0]).abs();
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn off_grid_atom() {
        let l0 = LinearFunctional::new(1.0, vec![crate::functional::Atom::new(-0.537, -1.0)], Vec::new()).unwrap();
        let p = Projector::new(&l0, 1.3, 100).unwrap();
        let seg = p.basis_samples([0.2, -0.7]);
        let z = p.coordinates(&seg).unwrap();
        assert!((z[0] - 0.2).abs() < 1e-12 && (z[1] + 0.7).abs() < 1e-12);
        let weights_total: f64 = p.weights.iter().map(|w| w[0]).sum();
        // ∫ cos(ω(ξ − θ)) over [θ, 0] with weight −1, plus v(0)φ(0) → 1 − sin(ωL)/ω.
        let expected = 1.0 - (1.3f64 * 0.537).sin() / 1.3;
        assert!((weights_total - expected).abs() < 1e-12);
    }
}
