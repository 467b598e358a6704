//! Experiment configuration files (TOML).
//!
//! Times are in the slow time `t` of the rescaled equation unless a field
//! says otherwise; delays and θ are in units of the original delay time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sdde_core::functional::Atom;
use sdde_core::sdde::{NoiseSpec, SddeSystem, DEFAULT_OVERFLOW_GUARD, DEFAULT_SCHEME, DEFAULT_STEPS_PER_DELAY};
use sdde_core::{InitialSegment, LinearFunctional, Nonlinearity};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment name; must match the subcommand when both are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub system: SystemConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub thresholds: ThresholdConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Delay window r.
    pub max_delay: f64,
    pub l0: FunctionalConfig,
    #[serde(default)]
    pub g: NonlinearityConfig,
    pub noise: NoiseConfig,
    pub xi: XiConfig,
}

/// `L(η) = Σ wᵢη(θᵢ) + Σ vⱼ·η(θⱼ)` with `points`/`jumps` as `[θ, weight]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub jumps: Vec<[f64; 2]>,
}

impl FunctionalConfig {
    pub fn point(theta: f64, weight: f64) -> Self {
        Self { points: vec![[theta, weight]], jumps: Vec::new() }
    }

    pub fn build(&self, max_delay: f64) -> CliResult<LinearFunctional> {
        let atoms = |v: &[[f64; 2]]| v.iter().map(|[t, w]| Atom::new(*t, *w)).collect();
        Ok(LinearFunctional::new(max_delay, atoms(&self.points), atoms(&self.jumps))?)
    }
}

/// `G(η) = ν₁(η) + ∫η³dν₃`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    #[serde(default)]
    pub nu1: FunctionalConfig,
    #[serde(default)]
    pub nu3: FunctionalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    Additive { sigma: f64 },
    Multiplicative { l1: FunctionalConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum XiConfig {
    Constant {
        value: f64,
    },
    Linear {
        slope: f64,
        intercept: f64,
    },
    Harmonic {
        omega: f64,
        z: [f64; 2],
        #[serde(default)]
        offset: f64,
    },
    PointMass,
    /// `ξᵢ = √(2hᵢ)·cos(ω_c·)` with `hᵢ` fixed or drawn per path.
    CriticalMode {
        amplitude: AmplitudeConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplitudeConfig {
    /// Fixed `√(2h)`.
    Fixed { sqrt_2h: f64 },
    /// `h` uniform on `[h_min, h_max]`.
    Uniform { h_min: f64, h_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    /// Final slow time T.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Grid points per delay window; `dt = ε²·r/steps_per_delay`.
    #[serde(default = "default_steps")]
    pub steps_per_delay: usize,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    /// Projection checkpoints per fast period `2πε²/ω_c`.
    #[serde(default = "default_checkpoints")]
    pub checkpoints_per_period: usize,
    #[serde(default = "default_guard")]
    pub overflow_guard: f64,
    /// Step of the averaged amplitude equation, slow time.
    #[serde(default = "default_h0_dt")]
    pub h0_dt: f64,
    /// Record every k-th step in `single` runs.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Rerun the full system at half the step and report the KS shift.
    #[serde(default)]
    pub dt_check: bool,
}

fn default_eps() -> Vec<f64> {
    vec![0.05]
}
fn default_horizon() -> f64 {
    1.0
}
fn default_steps() -> usize {
    DEFAULT_STEPS_PER_DELAY
}
fn default_scheme() -> String {
    DEFAULT_SCHEME.to_string()
}
fn default_checkpoints() -> usize {
    8
}
fn default_guard() -> f64 {
    DEFAULT_OVERFLOW_GUARD
}
fn default_h0_dt() -> f64 {
    1e-4
}
fn default_record_every() -> usize {
    16
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            eps: default_eps(),
            horizon: default_horizon(),
            steps_per_delay: default_steps(),
            scheme: default_scheme(),
            checkpoints_per_period: default_checkpoints(),
            overflow_guard: default_guard(),
            h0_dt: default_h0_dt(),
            record_every: default_record_every(),
            dt_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    /// Path i uses seed + i.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn default_paths() -> usize {
    1
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { n_paths: default_paths(), seed: 0, threads: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    /// `C_𝔢` of the stopping time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_e: Option<f64>,
    /// Exit level H* of the amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_star: Option<f64>,
    /// Exponent a of the events `sup α ≥ ε^{a/2}`, `sup‖𝒴‖ ≥ 8ε^a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Modulus-of-continuity window `r·ε^δ` for the driving noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Schema checks beyond what deserialization enforces.
    pub fn check(&self) -> CliResult<()> {
        let n = &self.numerics;
        let bad = |msg: String| Err(CliError::Config(msg));
        if n.eps.is_empty() || n.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad(format!("numerics.eps must be a nonempty list in (0, 1), got {:?}", n.eps));
        }
        if !(n.horizon > 0.0 && n.horizon.is_finite()) {
            return bad(format!("numerics.horizon must be positive, got {}", n.horizon));
        }
        if !(n.h0_dt > 0.0) {
            return bad(format!("numerics.h0_dt must be positive, got {}", n.h0_dt));
        }
        if n.checkpoints_per_period == 0 || n.record_every == 0 {
            return bad("numerics.checkpoints_per_period and record_every must be positive".into());
        }
        if self.ensemble.n_paths == 0 {
            return bad("ensemble.n_paths must be positive".into());
        }
        if self.ensemble.threads == Some(0) {
            return bad("ensemble.threads must be positive".into());
        }
        if let Some(h) = self.thresholds.h_star {
            if !(h > 0.0) {
                return bad(format!("thresholds.h_star must be positive, got {h}"));
            }
        }
        if let XiConfig::CriticalMode { amplitude: AmplitudeConfig::Uniform { h_min, h_max } } = self.system.xi {
            if !(0.0 <= h_min && h_min <= h_max) {
                return bad(format!("uniform amplitude needs 0 <= h_min <= h_max, got [{h_min}, {h_max}]"));
            }
        }
        Ok(())
    }

    pub fn build_system(&self) -> CliResult<SddeSystem> {
        let s = &self.system;
        let r = s.max_delay;
        let g = Nonlinearity::new(s.g.nu1.build(r)?, s.g.nu3.build(r)?);
        let noise = match &s.noise {
            NoiseConfig::Additive { sigma } => NoiseSpec::Additive { sigma: *sigma },
            NoiseConfig::Multiplicative { l1 } => NoiseSpec::Multiplicative { l1: l1.build(r)? },
        };
        Ok(SddeSystem::new(s.l0.build(r)?, g, noise)?)
    }

    /// Initial segment of one path; `h` is called only for critical modes.
    pub fn initial_segment(&self, omega: Option<f64>, h: impl FnOnce() -> f64) -> CliResult<InitialSegment> {
        Ok(match &self.system.xi {
            XiConfig::Constant { value } => InitialSegment::constant(*value),
            XiConfig::Linear { slope, intercept } => InitialSegment::Linear { slope: *slope, intercept: *intercept },
            XiConfig::Harmonic { omega, z, offset } => {
                InitialSegment::Harmonic { omega: *omega, z: *z, offset: *offset }
            }
            XiConfig::PointMass => InitialSegment::PointMass,
            XiConfig::CriticalMode { .. } => {
                let omega = omega
                    .ok_or_else(|| CliError::Config("critical_mode initial segment needs a critical system".into()))?;
                InitialSegment::cosine(omega, (2.0 * h()).sqrt())
            }
        })
    }

    /// Whether every path starts from the same segment.
    pub fn fixed_initial(&self) -> bool {
        !matches!(self.system.xi, XiConfig::CriticalMode { amplitude: AmplitudeConfig::Uniform { .. } })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIGURE: &str = r#"
kind = "figures"

[system]
max_delay = 1.0
l0 = { points = [[-1.0, -1.5707963267948966]] }
g = { nu3 = { points = [[-1.0, 1.0]] } }
noise = { kind = "additive", sigma = 1.0 }
xi = { kind = "critical_mode", amplitude = { kind = "fixed", sqrt_2h = 1.2 } }

[numerics]
eps = [0.05]
horizon = 2.0

[ensemble]
n_paths = 1000

[thresholds]
h_star = 1.5
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(FIGURE).unwrap();
        assert_eq!(cfg.kind.as_deref(), Some("figures"));
        assert_eq!(cfg.numerics.steps_per_delay, 256);
        let sys = cfg.build_system().unwrap();
        assert_eq!(sys.g.nu3.point_masses().len(), 1);
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let typo = FIGURE.replace("horizon = 2.0", "horizon = 2.0\nhorizn = 3.0");
        assert!(matches!(ExperimentConfig::from_toml(&typo), Err(CliError::Config(_))));
        let bad_eps = FIGURE.replace("eps = [0.05]", "eps = [1.5]");
        assert!(matches!(ExperimentConfig::from_toml(&bad_eps), Err(CliError::Config(_))));
        let no_paths = FIGURE.replace("n_paths = 1000", "n_paths = 0");
        assert!(ExperimentConfig::from_toml(&no_paths).is_err());
    }

    #[test]
    fn critical_mode_needs_omega() {
        let cfg = ExperimentConfig::from_toml(FIGURE).unwrap();
        assert!(cfg.initial_segment(None, || 0.72).is_err());
        let xi = cfg.initial_segment(Some(2.0), || 0.72).unwrap();
        assert!((xi.value(0.0) - 1.2).abs() < 1e-12);
    }
}
