//! Experiment kinds, looked up by name.

mod coupled;
mod figures;
mod single;
mod spectral;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdde_core::averaging::{
    averaged_additive, averaged_multiplicative_from_operators, AmplitudeSde, QuadratureOptions,
};
use sdde_core::ensemble::EnsembleRunner;
use sdde_core::sdde::{NoiseSpec, SchemeRegistry, SddeConfig, SddeScheme, SddeSystem};
use sdde_core::spectral::{analyze_spectrum, CriticalPair, SpectralOptions, SpectralSummary};
use sdde_core::{Error, InitialSegment};

pub use coupled::{coupled_ladder, Convergence, Couple, LadderPoint};
pub use figures::{figures_data, ExitTimes, Figures, FiguresData};
pub use single::Single;
pub use spectral::Spectral;

use crate::config::{AmplitudeConfig, ExperimentConfig, XiConfig};
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    fn about(&self) -> &'static str;

    /// Rescale the config for `--paper-scale`.
    fn paper_scale(&self, _cfg: &mut ExperimentConfig) {}

    fn run(&self, setup: &Setup, out: &mut OutputDir) -> CliResult<RunStatus>;
}

/// Paths lost to overflow, reported after all outputs are written.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStatus {
    pub failed: usize,
    pub total: usize,
}

impl RunStatus {
    pub fn add(&mut self, failed: usize, total: usize) {
        self.failed += failed;
        self.total += total;
    }
}

pub struct ExperimentRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(Spectral));
        reg.register(Arc::new(Single));
        reg.register(Arc::new(Couple));
        reg.register(Arc::new(Convergence));
        reg.register(Arc::new(Figures));
        reg.register(Arc::new(ExitTimes));
        reg
    }

    pub fn register(&mut self, exp: Arc<dyn Experiment>) {
        self.entries.insert(exp.name(), exp);
    }

    pub fn get(&self, name: &str) -> CliResult<Arc<dyn Experiment>> {
        self.entries.get(name).cloned().ok_or_else(|| CliError::UnknownExperiment(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Experiment>> {
        self.entries.values()
    }
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Everything an experiment needs, resolved once from the config.
pub struct Setup {
    pub cfg: ExperimentConfig,
    pub system: SddeSystem,
    pub spectrum: SpectralSummary,
    pair: Option<CriticalPair>,
    pub scheme: Arc<dyn SddeScheme>,
    pub runner: EnsembleRunner,
}

impl Setup {
    pub fn new(cfg: ExperimentConfig, schemes: &SchemeRegistry) -> CliResult<Self> {
        cfg.check()?;
        let system = cfg.build_system()?;
        let opts = SpectralOptions::default();
        let spectrum = analyze_spectrum(&system.l0, &opts)?;
        let pair = if spectrum.report.is_critical {
            Some(CriticalPair::from_summary(&system.l0, spectrum.clone(), &opts)?)
        } else {
            None
        };
        let scheme = schemes.get(&cfg.numerics.scheme)?;
        let runner = EnsembleRunner::new(cfg.ensemble.threads)?;
        Ok(Self { cfg, system, spectrum, pair, scheme, runner })
    }

    /// The critical pair; reduction experiments stop here on other systems.
    pub fn pair(&self) -> CliResult<&CriticalPair> {
        self.pair.as_ref().ok_or_else(|| {
            CliError::Core(Error::NotCritical(format!(
                "spectral gap {:.6}; no simple pair on the imaginary axis",
                self.spectrum.report.gap
            )))
        })
    }

    pub fn critical_pair(&self) -> Option<&CriticalPair> {
        self.pair.as_ref()
    }

    pub fn seed(&self, path: usize) -> u64 {
        self.cfg.ensemble.seed.wrapping_add(path as u64)
    }

    /// Initial `h` of path `i` for critical-mode segments.
    pub fn initial_h(&self, path: usize) -> Option<f64> {
        match self.cfg.system.xi {
            XiConfig::CriticalMode { amplitude: AmplitudeConfig::Fixed { sqrt_2h } } => Some(0.5 * sqrt_2h * sqrt_2h),
            XiConfig::CriticalMode { amplitude: AmplitudeConfig::Uniform { h_min, h_max } } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed(path));
                rng.set_stream(2);
                Some(if h_max > h_min { rng.random_range(h_min..h_max) } else { h_min })
            }
            _ => None,
        }
    }

    pub fn initial_segment(&self, path: usize) -> CliResult<InitialSegment> {
        self.cfg.initial_segment(self.pair.as_ref().map(|p| p.omega), || self.initial_h(path).unwrap_or(0.0))
    }

    pub fn sdde_config(&self, eps: f64, xi: InitialSegment) -> SddeConfig {
        let n = &self.cfg.numerics;
        let mut c = SddeConfig::new(self.system.clone(), eps, n.horizon, xi).with_steps_per_delay(n.steps_per_delay);
        c.overflow_guard = n.overflow_guard;
        c
    }

    /// Steps between projections: `checkpoints_per_period` per fast period.
    pub fn checkpoint_every(&self, pair: &CriticalPair) -> u64 {
        let h = pair.max_delay() / self.cfg.numerics.steps_per_delay as f64;
        let per_period = pair.period() / h;
        ((per_period / self.cfg.numerics.checkpoints_per_period as f64).round() as u64).max(1)
    }

    /// Averaged equation for ℋ⁰ of this system.
    pub fn amplitude_equation(&self) -> CliResult<AmplitudeSde> {
        let pair = self.pair()?;
        match &self.system.noise {
            NoiseSpec::Additive { sigma } => {
                Ok(averaged_additive(pair, &self.system.g, *sigma, &QuadratureOptions::default())?)
            }
            NoiseSpec::Multiplicative { l1 } => {
                if !self.system.g.is_zero() {
                    return Err(CliError::Config(
                        "the averaged equation with multiplicative noise is implemented for G = 0 only".into(),
                    ));
                }
                Ok(averaged_multiplicative_from_operators(pair.psi_tilde, l1, pair))
            }
        }
    }
}

/// Resolve, run, and write the manifest (and `error.json` on failure).
pub fn run_experiment(
    registry: &ExperimentRegistry,
    name: &str,
    cfg: ExperimentConfig,
    out_dir: &Path,
) -> CliResult<()> {
    let exp = registry.get(name)?;
    let mut out = OutputDir::create(out_dir)?;
    let kind_check = match cfg.kind.as_deref() {
        Some(kind) if kind != name => Err(CliError::Config(format!("config is for `{kind}`, not `{name}`"))),
        _ => Ok(()),
    };
    let result = kind_check.and_then(|()| Setup::new(cfg.clone(), &SchemeRegistry::builtin())).and_then(|setup| {
        let pair = setup.critical_pair();
        out.note("scheme", setup.scheme.name());
        if let Some(p) = pair {
            out.note("omega_c", p.omega);
        }
        for eps in &setup.cfg.numerics.eps {
            out.note(format!("dt_at_eps_{eps}"), setup.sdde_config(*eps, InitialSegment::constant(0.0)).dt());
        }
        out.note("threads", setup.runner.threads() as i64);
        exp.run(&setup, &mut out)
    });
    let (status, err) = match result {
        Ok(s) if s.failed > 0 => ("partial", Some(CliError::PartialEnsemble { failed: s.failed, total: s.total })),
        Ok(_) => ("ok", None),
        Err(e) => ("error", Some(e)),
    };
    out.write_manifest(name, status, &cfg)?;
    match err {
        Some(e) => {
            out.write_error(&e)?;
            Err(e)
        }
        None => Ok(()),
    }
}
