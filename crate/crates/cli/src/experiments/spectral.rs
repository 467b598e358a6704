use sdde_core::averaging::{check_stabilizing, QuadratureOptions};

use super::{Experiment, RunStatus, Setup};
use crate::error::CliResult;
use crate::output::{Cell, OutputDir};

/// Roots, criticality, Ψ̃, γ and its decay fit, averaged coefficients.
pub struct Spectral;

impl Experiment for Spectral {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn about(&self) -> &'static str {
        "characteristic roots, critical pair, bilinear-form vector and kernel decay"
    }

    fn run(&self, setup: &Setup, out: &mut OutputDir) -> CliResult<RunStatus> {
        let s = &setup.spectrum;
        out.write_csv("roots.csv", &["re", "im"], s.roots.iter().map(|z| [Cell::F(z.re), Cell::F(z.im)]))?;
        let reg = &s.region;
        let mut report: Vec<(&str, Cell)> = vec![
            ("is_critical", s.report.is_critical.into()),
            ("gap", s.report.gap.into()),
            ("n_roots", s.roots.len().into()),
            ("region_re_min", reg.re_min.into()),
            ("region_re_max", reg.re_max.into()),
            ("region_im_max", reg.im_max.into()),
        ];
        if let Some(pair) = setup.critical_pair() {
            out.write_csv(
                "gamma.csv",
                &["t", "gamma", "envelope"],
                pair.gamma
                    .times
                    .iter()
                    .zip(&pair.gamma.values)
                    .map(|(t, g)| [Cell::F(*t), Cell::F(*g), Cell::F(pair.decay.envelope(*t))]),
            )?;
            report.extend([
                ("omega_c", pair.omega.into()),
                ("psi_tilde_1", pair.psi_tilde[0].into()),
                ("psi_tilde_2", pair.psi_tilde[1].into()),
                ("decay_k", pair.decay.k.into()),
                ("decay_kappa", pair.decay.kappa.into()),
                ("decay_residual", pair.decay.residual.into()),
            ]);
            let stab = check_stabilizing(pair, &setup.system.g.nu3, &QuadratureOptions::default());
            report.push(("stabilizing", stab.stabilizing.into()));
            report.push(("c_g_hat", stab.c_g_hat.into()));
            if let Ok(sde) = setup.amplitude_equation() {
                report.extend([
                    ("amplitude_c0", sde.drift_coeffs[0].into()),
                    ("amplitude_c1", sde.drift_coeffs[1].into()),
                    ("amplitude_c2", sde.drift_coeffs[2].into()),
                    ("amplitude_diffusion", sde.diffusion_coeff().into()),
                    ("amplitude_provenance", sde.provenance.name().into()),
                ]);
            }
        }
        out.write_report("spectral_report.csv", &report)?;
        Ok(RunStatus::default())
    }
}
