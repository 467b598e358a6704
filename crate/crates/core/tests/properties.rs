use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use approx::assert_relative_eq;
use proptest::prelude::*;

use sdde_core::averaging::{
    averaged_multiplicative_coeffs, averaged_multiplicative_from_operators, multiplicative_matrix, simulate_h0,
    stabilizing_integral, AmplitudeSde, Diffusion, Provenance,
};
use sdde_core::segment::{apply_functional, SegmentBuffer};
use sdde_core::spectral::{find_roots, norm2, winding_count, CriticalPair, Region, Rotation, SpectralOptions};
use sdde_core::stats::{ks_distance, loglog_slope, modulus_of_continuity, EmpiricalCdf};
use sdde_core::wiener::WienerPath;
use sdde_core::{Atom, InitialSegment, LinearFunctional};

fn pair() -> &'static CriticalPair {
    static PAIR: OnceLock<CriticalPair> = OnceLock::new();
    PAIR.get_or_init(|| {
        let l0 = LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap();
        CriticalPair::analyze(&l0, &SpectralOptions::default()).unwrap()
    })
}

fn functional() -> impl Strategy<Value = LinearFunctional> {
    (
        prop::collection::vec((-1.0..=0.0f64, -2.0..2.0f64), 1..4),
        prop::collection::vec((-1.0..=0.0f64, -2.0..2.0f64), 0..3),
    )
        .prop_map(|(p, j)| {
            let atoms = |v: Vec<(f64, f64)>| v.into_iter().map(|(t, w)| Atom::new(t, w)).collect();
            LinearFunctional::new(1.0, atoms(p), atoms(j)).unwrap()
        })
}

/// A few low harmonics plus a quadratic on [-1, 0].
fn smooth_segment() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 7)
}

fn eval_smooth(c: &[f64], theta: f64) -> f64 {
    c[0] + c[1] * theta
        + c[2] * theta * theta
        + c[3] * (3.0 * theta).sin()
        + c[4] * (2.0 * theta).cos()
        + c[5] * (5.0 * theta + 0.3).sin()
        + c[6] * (FRAC_PI_2 * theta).cos()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn rotation_is_an_isometry(v in prop::array::uniform2(-1e3..1e3f64), t in -1e6..1e6f64) {
        let rot = Rotation::at(FRAC_PI_2, t);
        let n = norm2(v);
        prop_assert!((norm2(rot.apply(v)) - n).abs() <= 1e-12 * n.max(1.0));
        let back = rot.apply_inverse(rot.apply(v));
        prop_assert!(norm2([back[0] - v[0], back[1] - v[1]]) <= 1e-12 * n.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent(c in smooth_segment(), cells in prop::sample::select(vec![64usize, 128, 256])) {
        let proj = pair().projector(cells).unwrap();
        let seg: Vec<f64> = proj.grid().map(|th| eval_smooth(&c, th)).collect();
        let (_, y) = proj.project(&seg).unwrap();
        let z = proj.coordinates(&y).unwrap();
        prop_assert!(norm2(z) < 1e-8, "{:?}", z);
        let (z2, y2) = proj.project(&proj.basis_samples([c[0], c[1]])).unwrap();
        prop_assert!((z2[0] - c[0]).abs() < 1e-8 && (z2[1] - c[1]).abs() < 1e-8);
        prop_assert!(y2.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn functionals_are_linear(f in functional(), g in functional(), a in -3.0..3.0f64, b in -3.0..3.0f64, c in smooth_segment()) {
        let xi = |th: f64| eval_smooth(&c, th);
        let lhs = f.combine(a, &g, b).unwrap().apply(xi);
        let rhs = a * f.apply(xi) + b * g.apply(xi);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        prop_assert!((f.apply(|_| 1.0) - f.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn buffer_functionals_are_linear(f in functional(), g in functional(), a in -3.0..3.0f64, b in -3.0..3.0f64, c in smooth_segment()) {
        let xi = InitialSegment::Harmonic { omega: 3.0, z: [c[0], c[1]], offset: c[2] };
        let buf = SegmentBuffer::prefilled(0.3, 1.0, 64, &xi).unwrap();
        let fg = f.combine(a, &g, b).unwrap();
        let lhs = apply_functional(&fg, &buf, 1).unwrap();
        let rhs = a * apply_functional(&f, &buf, 1).unwrap() + b * apply_functional(&g, &buf, 1).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn grid_samples_are_exact(c in smooth_segment(), n in 8usize..200) {
        let xi = InitialSegment::Harmonic { omega: 2.0, z: [c[0], c[1]], offset: c[2] };
        let buf = SegmentBuffer::prefilled(0.2, 1.0, n, &xi).unwrap();
        let grid = buf.grid_values();
        for (j, v) in grid.iter().enumerate() {
            let theta = -1.0 + j as f64 / n as f64;
            prop_assert_eq!(buf.sample(theta).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn stabilizing_integral_has_degree_four(nu3 in functional(), z in prop::array::uniform2(-2.0..2.0f64), s in 0.1..5.0f64) {
        let base = stabilizing_integral(pair(), &nu3, z, 256);
        let scaled = stabilizing_integral(pair(), &nu3, [s * z[0], s * z[1]], 256);
        prop_assert!((scaled - s.powi(4) * base).abs() <= 1e-8 * (s.powi(4) * base).abs().max(1e-12));
    }

    #[test]
    fn multiplicative_coefficients_agree(l1 in functional()) {
        let p = pair();
        let sde = averaged_multiplicative_from_operators(p.psi_tilde, &l1, p);
        let (c1, c2) = averaged_multiplicative_coeffs(&multiplicative_matrix(p.psi_tilde, &l1, p.omega)).unwrap();
        prop_assert!((sde.drift_coeffs[1] - c2).abs() <= 1e-12 * c2.abs().max(1.0));
        prop_assert!((sde.diffusion_coeff() - c1).abs() <= 1e-12 * c1.abs().max(1.0));
    }

    #[test]
    fn winding_matches_found_roots(a in -3.0..-0.2f64, frac in -0.95..0.95f64, tau in 0.1..=1.0f64, c in -0.5..0.5f64) {
        // |b| + |c| < |a| keeps every root of λ = a + b e^{-λτ} + c e^{-λ} in the left half-plane.
        let extra = c * a.abs();
        let b = frac * (a.abs() - extra.abs());
        let l0 = LinearFunctional::new(
            1.0,
            vec![Atom::new(0.0, a), Atom::new(-tau, b), Atom::new(-1.0, extra)],
            vec![],
        ).unwrap();
        let region = Region::default_for_delay(1.0);
        let roots = find_roots(&l0, &region, 8).unwrap();
        prop_assert_eq!(roots.len(), winding_count(&l0, &region).unwrap());
        prop_assert!(roots.iter().all(|z| z.re < 0.0));
    }
}

fn cdf() -> impl Strategy<Value = EmpiricalCdf> {
    (prop::collection::vec(0.0..2.0f64, 1..60), 0usize..20)
        .prop_map(|(s, c)| EmpiricalCdf::with_censored(s, c, 2.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ks_is_symmetric(a in cdf(), b in cdf()) {
        let ab = ks_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, ks_distance(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn cdf_is_monotone_with_full_mass(a in cdf(), xs in prop::collection::vec(-1.0..3.0f64, 2..40)) {
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        let f: Vec<f64> = xs.iter().map(|&x| a.eval(x)).collect();
        prop_assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(f.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(a.eval(a.horizon()), 1.0);
        prop_assert_eq!(a.len(), a.samples().len() + a.censored_count());
        let below = a.eval(a.horizon() - 1e-12);
        prop_assert!((1.0 - below - a.censored_count() as f64 / a.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn amplitude_stays_nonnegative(
        seed in any::<u64>(),
        c0 in 0.0..2.0f64,
        c1 in -2.0..2.0f64,
        c2 in -2.0..0.5f64,
        d in 0.0..3.0f64,
        h0 in 0.0..2.0f64,
    ) {
        let sde = AmplitudeSde { drift_coeffs: [c0, c1, c2], diffusion: Diffusion::SqrtH(d), provenance: Provenance::Quadrature };
        let w = WienerPath::new(seed, 1e-3).unwrap();
        let path = simulate_h0(&sde, h0, 1.0, &w, 1).unwrap();
        prop_assert!(path.values.iter().all(|h| *h >= 0.0));
    }

    #[test]
    fn modulus_grows_with_window(v in prop::collection::vec(-1.0..1.0f64, 2..200), a in 0.01..0.5f64) {
        let dt = 0.01;
        let m1 = modulus_of_continuity(&v, dt, a, 1.0);
        let m2 = modulus_of_continuity(&v, dt, 2.0 * a, 1.0);
        prop_assert!(m1 >= 0.0 && m1 <= m2);
    }

    #[test]
    fn slope_of_exact_power_law(p in -1.0..6.0f64, c in 0.01..100.0f64) {
        let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025].iter().map(|&e: &f64| (e, c * e.powf(p))).collect();
        let fit = loglog_slope(&pts).unwrap();
        assert_relative_eq!(fit.slope, p, epsilon = 1e-9);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-9);
    }
}
