//! The rescaled SDDE
//! `dX = ε⁻²L₀(Π̂X)dt + G(Π̂X)dt + σdW` or `… + L₁(Π̂X)dW`.

mod scheme;
mod simulate;

pub use scheme::{CompiledModel, EulerMaruyama, Heun, SchemeRegistry, SddeScheme};
pub use simulate::{project_trajectory, simulate_sdde, Blowup, ProjectionPoint, SddeRun, Stepper, Trajectory};

use crate::error::{Error, Result};
use crate::functional::{LinearFunctional, Nonlinearity};
use crate::initial::InitialSegment;
use crate::segment::Taps;
use scheme::CompiledNoise;

pub const DEFAULT_STEPS_PER_DELAY: usize = 256;
pub const DEFAULT_OVERFLOW_GUARD: f64 = 1e6;
pub const DEFAULT_SCHEME: &str = "heun";
/// dt may not exceed this fraction of `ε²·min(1/‖L₀‖, 2π/ω)`.
pub const STABILITY_FACTOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Additive { sigma: f64 },
    Multiplicative { l1: LinearFunctional },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SddeSystem {
    pub l0: LinearFunctional,
    pub g: Nonlinearity,
    pub noise: NoiseSpec,
}

impl SddeSystem {
    pub fn new(l0: LinearFunctional, g: Nonlinearity, noise: NoiseSpec) -> Result<Self> {
        if l0.is_zero() {
            return Err(Error::DegenerateFunctional);
        }
        let r = l0.max_delay();
        let mut parts = vec![&g.nu1, &g.nu3];
        match &noise {
            NoiseSpec::Additive { sigma } => {
                if !sigma.is_finite() {
                    return Err(Error::InvalidArgument(format!("sigma must be finite, got {sigma}")));
                }
            }
            NoiseSpec::Multiplicative { l1 } => {
                g.check_lipschitz()?;
                parts.push(l1);
            }
        }
        if let Some(f) = parts.into_iter().find(|f| f.max_delay() > r) {
            return Err(Error::InvalidFunctional(format!(
                "functional reaches back {} beyond the delay window {r} of L0",
                f.max_delay()
            )));
        }
        Ok(Self { l0, g, noise })
    }

    pub fn max_delay(&self) -> f64 {
        self.l0.max_delay()
    }

    /// Same system with the noise switched off.
    pub fn deterministic(&self) -> Self {
        Self { noise: NoiseSpec::Additive { sigma: 0.0 }, ..self.clone() }
    }

    /// Linear part only: G and noise removed.
    pub fn unperturbed(&self) -> Result<Self> {
        Ok(Self {
            l0: self.l0.clone(),
            g: Nonlinearity::zero(self.max_delay())?,
            noise: NoiseSpec::Additive { sigma: 0.0 },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SddeConfig {
    pub system: SddeSystem,
    pub eps: f64,
    pub horizon: f64,
    /// Grid points per delay window; `dt = ε²r/steps_per_delay`.
    pub steps_per_delay: usize,
    pub xi: InitialSegment,
    pub overflow_guard: f64,
}

impl SddeConfig {
    pub fn new(system: SddeSystem, eps: f64, horizon: f64, xi: InitialSegment) -> Self {
        Self {
            system,
            eps,
            horizon,
            steps_per_delay: DEFAULT_STEPS_PER_DELAY,
            xi,
            overflow_guard: DEFAULT_OVERFLOW_GUARD,
        }
    }

    pub fn with_steps_per_delay(mut self, n: usize) -> Self {
        self.steps_per_delay = n;
        self
    }

    pub fn dt(&self) -> f64 {
        self.eps * self.eps * self.system.max_delay() / self.steps_per_delay as f64
    }

    /// Number of steps covering the horizon.
    pub fn n_steps(&self) -> u64 {
        (self.horizon / self.dt() - 1e-9).ceil().max(0.0) as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.steps_per_delay < 3 {
            return Err(Error::InvalidArgument("steps_per_delay must be at least 3".into()));
        }
        if !(self.overflow_guard > 0.0) {
            return Err(Error::InvalidArgument("overflow guard must be positive".into()));
        }
        let h = self.system.max_delay() / self.steps_per_delay as f64;
        if let Some(d) = self.system.l0.min_positive_delay() {
            if d < h * (1.0 - 1e-9) {
                return Err(Error::InvalidArgument(format!(
                    "delay {d} is shorter than the grid step {h}; raise steps_per_delay"
                )));
            }
        }
        Ok(())
    }

    /// `dt ≤ 0.1·ε²·min(1/‖L₀‖, 2π/ω)`; ω is skipped when unknown.
    pub fn check_stability(&self, omega: Option<f64>) -> Result<()> {
        let mut scale = 1.0 / self.system.l0.total_variation();
        if let Some(w) = omega {
            scale = scale.min(std::f64::consts::TAU / w);
        }
        let bound = STABILITY_FACTOR * self.eps * self.eps * scale;
        let dt = self.dt();
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::StiffStep { dt, bound });
        }
        Ok(())
    }

    pub fn compile(&self) -> CompiledModel {
        let n = self.steps_per_delay;
        let sys = &self.system;
        CompiledModel {
            l0: Taps::compile(&sys.l0, n),
            nu1: Taps::compile(&sys.g.nu1, n),
            nu3: Taps::compile(&sys.g.nu3, n),
            noise: match &sys.noise {
                NoiseSpec::Additive { sigma } => CompiledNoise::Additive(*sigma),
                NoiseSpec::Multiplicative { l1 } => CompiledNoise::Multiplicative(Taps::compile(l1, n)),
            },
            inv_eps_sq: 1.0 / (self.eps * self.eps),
            dt: self.dt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn l0() -> LinearFunctional {
        LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap()
    }

    #[test]
    fn multiplicative_rejects_cubic() {
        let nu3 = LinearFunctional::point(1.0, -1.0, 1.0).unwrap();
        let g = Nonlinearity::new(LinearFunctional::zero(1.0).unwrap(), nu3);
        let l1 = LinearFunctional::point(1.0, -1.0, 0.5).unwrap();
        assert!(SddeSystem::new(l0(), g, NoiseSpec::Multiplicative { l1 }).is_err());
    }

    #[test]
    fn zero_l0_rejected() {
        let z = LinearFunctional::zero(1.0).unwrap();
        let g = Nonlinearity::zero(1.0).unwrap();
        assert_eq!(SddeSystem::new(z, g, NoiseSpec::Additive { sigma: 1.0 }).unwrap_err(), Error::DegenerateFunctional);
    }

    #[test]
    fn stability_bound() {
        let sys = SddeSystem::new(l0(), Nonlinearity::zero(1.0).unwrap(), NoiseSpec::Additive { sigma: 1.0 }).unwrap();
        let cfg = SddeConfig::new(sys, 0.1, 1.0, InitialSegment::constant(0.0));
        assert!(cfg.check_stability(Some(FRAC_PI_2)).is_ok());
        let coarse = cfg.clone().with_steps_per_delay(8);
        assert!(matches!(coarse.check_stability(Some(FRAC_PI_2)), Err(Error::StiffStep { .. })));
        assert_eq!(cfg.n_steps(), 25600);
    }
}
