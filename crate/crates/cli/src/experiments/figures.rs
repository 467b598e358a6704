use sdde_core::averaging::{simulate_h0_with, AmplitudeSde, ExitDetector};
use sdde_core::sdde::Stepper;
use sdde_core::stats::{ks_distance, EmpiricalCdf};
use sdde_core::wiener::WienerPath;

use super::{Experiment, RunStatus, Setup};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullSample {
    pub h0: f64,
    /// `½‖z_T‖₂²`; NaN after a blowup.
    pub h: f64,
    /// First time `|X| ≥ √(2H*)`.
    pub exit: Option<f64>,
    pub blowup: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedSample {
    pub h0: f64,
    pub h: f64,
    pub exit: Option<f64>,
}

/// Terminal amplitudes and exit times of the full equation and of ℋ⁰.
pub struct FiguresData {
    pub eps: f64,
    pub horizon: f64,
    pub sde: AmplitudeSde,
    pub full: Vec<FullSample>,
    pub averaged: Vec<AveragedSample>,
    /// Full ensemble rerun at half the step, if requested.
    pub half_step: Option<Vec<FullSample>>,
}

impl FiguresData {
    pub fn h_cdfs(&self) -> CliResult<(EmpiricalCdf, EmpiricalCdf)> {
        Ok((
            EmpiricalCdf::new(self.full.iter().filter(|s| !s.blowup).map(|s| s.h))?,
            EmpiricalCdf::new(self.averaged.iter().map(|s| s.h).filter(|h| h.is_finite()))?,
        ))
    }

    /// Exit-time CDFs with the censored mass at the horizon.
    pub fn exit_cdfs(&self) -> CliResult<(EmpiricalCdf, EmpiricalCdf)> {
        Ok((
            EmpiricalCdf::from_exit_times(self.full.iter().map(|s| s.exit), self.horizon)?,
            EmpiricalCdf::from_exit_times(self.averaged.iter().map(|s| s.exit), self.horizon)?,
        ))
    }

    pub fn ks_h(&self) -> CliResult<f64> {
        let (a, b) = self.h_cdfs()?;
        Ok(ks_distance(&a, &b)?)
    }

    pub fn ks_exit(&self) -> CliResult<f64> {
        let (a, b) = self.exit_cdfs()?;
        Ok(ks_distance(&a, &b)?)
    }

    pub fn blowups(&self) -> usize {
        self.full.iter().filter(|s| s.blowup).count()
    }
}

fn full_ensemble(setup: &Setup, eps: f64, steps_per_delay: usize, h_star: Option<f64>) -> CliResult<Vec<FullSample>> {
    let pair = setup.pair()?;
    let level = h_star.map(|h| (2.0 * h).sqrt());
    setup.runner.try_map(setup.cfg.ensemble.n_paths, |i| {
        let cfg = setup.sdde_config(eps, setup.initial_segment(i)?).with_steps_per_delay(steps_per_delay);
        cfg.check_stability(Some(pair.omega))?;
        let projector = pair.projector(steps_per_delay)?;
        let w = WienerPath::new(setup.seed(i), cfg.dt())?;
        let mut stepper = Stepper::new(&cfg, setup.scheme.clone())?;
        let (z0, _) = stepper.project(&projector)?;
        let mut det = level.map(ExitDetector::new);
        if let Some(d) = det.as_mut() {
            d.observe(0.0, stepper.value().abs());
        }
        let mut noise = w.stream(0);
        for _ in 0..cfg.n_steps() {
            if !stepper.step(noise.next_increment()) {
                break;
            }
            if let Some(d) = det.as_mut() {
                d.observe(stepper.time(), stepper.value().abs());
            }
        }
        let blowup = stepper.blowup().is_some();
        let h = if blowup {
            f64::NAN
        } else {
            let (z, _) = stepper.project(&projector)?;
            0.5 * (z[0] * z[0] + z[1] * z[1])
        };
        Ok(FullSample { h0: 0.5 * (z0[0] * z0[0] + z0[1] * z0[1]), h, exit: det.and_then(|d| d.hit()), blowup })
    })
}

fn averaged_ensemble(
    setup: &Setup,
    sde: &AmplitudeSde,
    h0: &[f64],
    h_star: Option<f64>,
) -> CliResult<Vec<AveragedSample>> {
    let n = &setup.cfg.numerics;
    setup.runner.try_map(h0.len(), |i| {
        let w = WienerPath::new(setup.seed(i), n.h0_dt)?;
        let mut det = h_star.map(ExitDetector::new);
        let path = simulate_h0_with(sde, h0[i], n.horizon, &w, usize::MAX, |t, h| {
            if let Some(d) = det.as_mut() {
                d.observe(t, h);
            }
        })?;
        Ok(AveragedSample {
            h0: h0[i],
            h: if path.overflow.is_some() { f64::NAN } else { path.last() },
            exit: det.and_then(|d| d.hit()),
        })
    })
}

/// Both ensembles at the first ε. ℋ⁰ of path i starts from the projected
/// amplitude of the full path's initial segment.
pub fn figures_data(setup: &Setup) -> CliResult<FiguresData> {
    let sde = setup.amplitude_equation()?;
    let n = &setup.cfg.numerics;
    let eps = n.eps[0];
    let h_star = setup.cfg.thresholds.h_star;
    let full = full_ensemble(setup, eps, n.steps_per_delay, h_star)?;
    let h0: Vec<f64> = (0..full.len()).map(|i| setup.initial_h(i).unwrap_or(full[i].h0)).collect();
    let averaged = averaged_ensemble(setup, &sde, &h0, h_star)?;
    let half_step = if n.dt_check { Some(full_ensemble(setup, eps, 2 * n.steps_per_delay, h_star)?) } else { None };
    Ok(FiguresData { eps, horizon: n.horizon, sde, full, averaged, half_step })
}

fn paper_scale(cfg: &mut ExperimentConfig) {
    cfg.numerics.eps = vec![0.025];
    cfg.ensemble.n_paths = 4000;
}

fn cdf_rows(cdf: &EmpiricalCdf) -> Vec<[Cell; 2]> {
    cdf.steps().into_iter().map(|(x, f)| [Cell::F(x), Cell::F(f)]).collect()
}

fn write_common(data: &FiguresData, out: &mut OutputDir, terminal: bool) -> CliResult<Vec<(&'static str, Cell)>> {
    let n_full = data.full.len();
    let mut report: Vec<(&'static str, Cell)> = vec![
        ("eps", data.eps.into()),
        ("n_paths", n_full.into()),
        ("n_blowup", data.blowups().into()),
        ("averaged_c0", data.sde.drift_coeffs[0].into()),
        ("averaged_c1", data.sde.drift_coeffs[1].into()),
        ("averaged_c2", data.sde.drift_coeffs[2].into()),
        ("averaged_diffusion", data.sde.diffusion_coeff().into()),
        ("ks_band", (1.63 * (2.0 / n_full as f64).sqrt()).into()),
    ];
    if terminal {
        out.write_csv(
            "h_full.csv",
            &["path", "h0", "h", "blowup"],
            data.full.iter().enumerate().map(|(i, s)| {
                [i.into(), s.h0.into(), if s.blowup { Cell::Empty } else { s.h.into() }, s.blowup.into()]
            }),
        )?;
        out.write_csv(
            "h_avg.csv",
            &["path", "h0", "h"],
            data.averaged.iter().enumerate().map(|(i, s)| [i.into(), s.h0.into(), Cell::F(s.h)]),
        )?;
        let (a, b) = data.h_cdfs()?;
        out.write_csv("cdf_h_full.csv", &["x", "F"], cdf_rows(&a))?;
        out.write_csv("cdf_h_avg.csv", &["x", "F"], cdf_rows(&b))?;
        report.push(("ks_h", ks_distance(&a, &b)?.into()));
        if let Some(half) = &data.half_step {
            let c = EmpiricalCdf::new(half.iter().filter(|s| !s.blowup).map(|s| s.h))?;
            report.push(("ks_h_half_step", ks_distance(&a, &c)?.into()));
        }
    }
    let tau = |exit: Option<f64>| [Cell::from(exit), Cell::B(exit.is_none())];
    out.write_csv(
        "tau_full.csv",
        &["path", "tau", "censored"],
        data.full.iter().enumerate().map(|(i, s)| {
            let [t, c] = tau(s.exit);
            [i.into(), t, c]
        }),
    )?;
    out.write_csv(
        "tau_avg.csv",
        &["path", "tau", "censored"],
        data.averaged.iter().enumerate().map(|(i, s)| {
            let [t, c] = tau(s.exit);
            [i.into(), t, c]
        }),
    )?;
    let (a, b) = data.exit_cdfs()?;
    out.write_csv("cdf_tau_full.csv", &["x", "F"], cdf_rows(&a))?;
    out.write_csv("cdf_tau_avg.csv", &["x", "F"], cdf_rows(&b))?;
    report.push(("ks_tau", ks_distance(&a, &b)?.into()));
    report.push(("censored_full", a.censored_count().into()));
    report.push(("censored_avg", b.censored_count().into()));
    if let Some(half) = &data.half_step {
        let c = EmpiricalCdf::from_exit_times(half.iter().map(|s| s.exit), data.horizon)?;
        report.push(("ks_tau_half_step", ks_distance(&a, &c)?.into()));
    }
    Ok(report)
}

fn status(data: &FiguresData) -> RunStatus {
    let mut s = RunStatus::default();
    s.add(data.blowups(), data.full.len());
    s
}

/// Terminal-amplitude and exit-time distributions, full vs averaged.
pub struct Figures;

impl Experiment for Figures {
    fn name(&self) -> &'static str {
        "figures"
    }

    fn about(&self) -> &'static str {
        "terminal amplitude and exit-time samples of the full and averaged equations"
    }

    fn paper_scale(&self, cfg: &mut ExperimentConfig) {
        paper_scale(cfg);
    }

    fn run(&self, setup: &Setup, out: &mut OutputDir) -> CliResult<RunStatus> {
        if setup.cfg.thresholds.h_star.is_none() {
            return Err(CliError::Config("figures needs thresholds.h_star".into()));
        }
        let data = figures_data(setup)?;
        let report = write_common(&data, out, true)?;
        out.write_report("ks.csv", &report)?;
        Ok(status(&data))
    }
}

/// Exit-time distributions only.
pub struct ExitTimes;

impl Experiment for ExitTimes {
    fn name(&self) -> &'static str {
        "exit_times"
    }

    fn about(&self) -> &'static str {
        "exit-time samples of the full and averaged equations"
    }

    fn paper_scale(&self, cfg: &mut ExperimentConfig) {
        paper_scale(cfg);
    }

    fn run(&self, setup: &Setup, out: &mut OutputDir) -> CliResult<RunStatus> {
        if setup.cfg.thresholds.h_star.is_none() {
            return Err(CliError::Config("exit_times needs thresholds.h_star".into()));
        }
        let data = figures_data(setup)?;
        let report = write_common(&data, out, false)?;
        out.write_report("ks.csv", &report)?;
        Ok(status(&data))
    }
}
