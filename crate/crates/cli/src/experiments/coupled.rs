use sdde_core::reduced::{coupled_run, stopping_diagnostics, CoupledOptions, CoupledRun, EnsembleStats};
use sdde_core::stats::{loglog_slope, modulus_of_continuity};
use sdde_core::wiener::WienerPath;

use super::{Experiment, RunStatus, Setup};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, OutputDir};

/// Ensemble of coupled runs at one ε.
pub struct LadderPoint {
    pub eps: f64,
    pub dt: f64,
    pub runs: Vec<CoupledRun>,
    pub stats: EnsembleStats,
    /// Mean modulus of continuity of W over windows `r·ε^δ`.
    pub noise_modulus: Option<f64>,
}

/// The full equation and both reduced processes on shared noise, for every ε.
pub fn coupled_ladder(setup: &Setup) -> CliResult<Vec<LadderPoint>> {
    let pair = setup.pair()?;
    let n = setup.cfg.ensemble.n_paths;
    let opts = CoupledOptions {
        checkpoint_every: setup.checkpoint_every(pair),
        c_e: setup.cfg.thresholds.c_e.unwrap_or(f64::INFINITY),
        record_series: false,
    };
    let window = setup.cfg.thresholds.delta;
    setup
        .cfg
        .numerics
        .eps
        .iter()
        .map(|&eps| {
            let dt = setup.sdde_config(eps, setup.initial_segment(0)?).dt();
            let runs = setup.runner.try_map(n, |i| -> CliResult<_> {
                let cfg = setup.sdde_config(eps, setup.initial_segment(i)?);
                let w = WienerPath::new(setup.seed(i), dt)?;
                let run = coupled_run(&cfg, pair, setup.scheme.clone(), &w, &opts)?;
                let modulus = window.map(|delta| {
                    let mut acc = 0.0;
                    let path: Vec<f64> = std::iter::once(0.0)
                        .chain(w.stream(0).take(cfg.n_steps() as usize).map(|dw| {
                            acc += dw;
                            acc
                        }))
                        .collect();
                    modulus_of_continuity(&path, dt, pair.max_delay() * eps.powf(delta), cfg.horizon)
                });
                Ok((run, modulus))
            })?;
            let mut stats = EnsembleStats::default();
            for (r, _) in &runs {
                stats.add(r);
            }
            let noise_modulus = window.map(|_| runs.iter().filter_map(|(_, m)| *m).sum::<f64>() / n as f64);
            Ok(LadderPoint { eps, dt, runs: runs.into_iter().map(|(r, _)| r).collect(), stats, noise_modulus })
        })
        .collect()
}

fn write_ladder(setup: &Setup, out: &mut OutputDir, ladder: &[LadderPoint]) -> CliResult<RunStatus> {
    let a = setup.cfg.thresholds.a;
    out.write_csv(
        "couple_paths.csv",
        &[
            "eps",
            "path",
            "sup_alpha",
            "sup_beta",
            "sup_y",
            "sup_err_hat",
            "sup_err_tilde",
            "e_time",
            "in_event",
            "final_h",
            "blowup",
        ],
        ladder.iter().flat_map(|p| {
            p.runs.iter().enumerate().map(move |(i, r)| {
                [
                    Cell::F(p.eps),
                    i.into(),
                    r.sup_alpha.into(),
                    r.sup_beta.into(),
                    r.sup_y.into(),
                    r.sup_err_hat.into(),
                    r.sup_err_tilde.into(),
                    r.e_time.into(),
                    stopping_diagnostics(r).in_event.into(),
                    r.final_h().into(),
                    r.blowup.map_or(Cell::Empty, |(c, _)| c.name().into()),
                ]
            })
        }),
    )?;
    out.write_csv(
        "couple_summary.csv",
        &[
            "eps",
            "dt",
            "n_paths",
            "n_blowup",
            "mean_sup_alpha_sq",
            "mean_sup_beta_sq",
            "mean_sup_y",
            "mean_sup_err_hat4",
            "mean_sup_err_tilde4",
            "p_event",
            "p_alpha_large",
            "p_y_large",
            "mean_noise_modulus",
        ],
        ladder.iter().map(|p| {
            let s = &p.stats;
            let frac = |hit: &dyn Fn(&CoupledRun) -> bool| {
                Cell::F(p.runs.iter().filter(|r| r.blowup.is_none() && hit(r)).count() as f64 / s.n_paths.max(1) as f64)
            };
            let (alpha_large, y_large) = match a {
                Some(a) => (frac(&|r| r.sup_alpha >= p.eps.powf(a / 2.0)), frac(&|r| r.sup_y >= 8.0 * p.eps.powf(a))),
                None => (Cell::Empty, Cell::Empty),
            };
            [
                Cell::F(p.eps),
                p.dt.into(),
                s.n_paths.into(),
                s.n_blowup.into(),
                s.mean_sup_alpha_sq().into(),
                s.mean_sup_beta_sq().into(),
                s.mean_sup_y().into(),
                s.mean_sup_err_hat4().into(),
                s.mean_sup_err_tilde4().into(),
                s.p_event().into(),
                alpha_large,
                y_large,
                p.noise_modulus.into(),
            ]
        }),
    )?;
    let mut status = RunStatus::default();
    for p in ladder {
        status.add(p.stats.n_blowup as usize, p.runs.len());
    }
    Ok(status)
}

pub struct Couple;

impl Experiment for Couple {
    fn name(&self) -> &'static str {
        "couple"
    }

    fn about(&self) -> &'static str {
        "coupled full and reduced ensembles with error and stopping diagnostics"
    }

    fn run(&self, setup: &Setup, out: &mut OutputDir) -> CliResult<RunStatus> {
        let ladder = coupled_ladder(setup)?;
        write_ladder(setup, out, &ladder)
    }
}

/// Metrics whose decay in ε is fitted on log-log axes.
pub const RATE_METRICS: [&str; 5] =
    ["mean_sup_err_tilde4", "mean_sup_err_hat4", "mean_sup_beta_sq", "mean_sup_alpha_sq", "mean_sup_y"];

pub fn rate_metric(stats: &EnsembleStats, name: &str) -> f64 {
    match name {
        "mean_sup_err_tilde4" => stats.mean_sup_err_tilde4(),
        "mean_sup_err_hat4" => stats.mean_sup_err_hat4(),
        "mean_sup_beta_sq" => stats.mean_sup_beta_sq(),
        "mean_sup_alpha_sq" => stats.mean_sup_alpha_sq(),
        "mean_sup_y" => stats.mean_sup_y(),
        _ => f64::NAN,
    }
}

pub struct Convergence;

impl Experiment for Convergence {
    fn name(&self) -> &'static str {
        "convergence"
    }

    fn about(&self) -> &'static str {
        "ε-ladder of coupled ensembles with log-log rate fits"
    }

    fn run(&self, setup: &Setup, out: &mut OutputDir) -> CliResult<RunStatus> {
        if setup.cfg.numerics.eps.len() < 3 {
            return Err(CliError::Config("convergence needs at least 3 values in numerics.eps".into()));
        }
        let ladder = coupled_ladder(setup)?;
        let status = write_ladder(setup, out, &ladder)?;
        let rows: Vec<[Cell; 4]> = RATE_METRICS
            .iter()
            .map(|m| {
                let pts: Vec<(f64, f64)> = ladder.iter().map(|p| (p.eps, rate_metric(&p.stats, m))).collect();
                match loglog_slope(&pts) {
                    Ok(fit) => [(*m).into(), fit.slope.into(), fit.intercept.into(), fit.r_squared.into()],
                    Err(_) => [(*m).into(), Cell::Empty, Cell::Empty, Cell::Empty],
                }
            })
            .collect();
        out.write_csv("slopes.csv", &["metric", "slope", "intercept", "r_squared"], rows)?;
        Ok(status)
    }
}
