//! Time-stepping schemes for the rescaled SDDE, selectable by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::segment::{SegmentBuffer, Taps};

/// Drift and diffusion of one system compiled against a fixed grid.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub(crate) l0: Taps,
    pub(crate) nu1: Taps,
    pub(crate) nu3: Taps,
    pub(crate) noise: CompiledNoise,
    pub(crate) inv_eps_sq: f64,
    pub(crate) dt: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum CompiledNoise {
    Additive(f64),
    Multiplicative(Taps),
}

impl CompiledModel {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn drift(&self, buf: &SegmentBuffer) -> f64 {
        self.inv_eps_sq * self.l0.eval(buf, 1) + self.nu1.eval(buf, 1) + self.nu3.eval(buf, 3)
    }

    #[inline]
    pub fn diffusion(&self, buf: &SegmentBuffer) -> f64 {
        match &self.noise {
            CompiledNoise::Additive(sigma) => *sigma,
            CompiledNoise::Multiplicative(l1) => l1.eval(buf, 1),
        }
    }
}

/// One step `X(t) → X(t + dt)` on the buffer, consuming the increment `dw`.
pub trait SddeScheme: Send + Sync {
    fn name(&self) -> &'static str;

    fn step(&self, model: &CompiledModel, buf: &mut SegmentBuffer, dw: f64);
}

/// `X ← X + dt·f(seg) + g(seg)·ΔW`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EulerMaruyama;

impl SddeScheme for EulerMaruyama {
    fn name(&self) -> &'static str {
        "euler-maruyama"
    }

    #[inline]
    fn step(&self, model: &CompiledModel, buf: &mut SegmentBuffer, dw: f64) {
        let x = buf.latest();
        let next = x + model.dt * model.drift(buf) + model.diffusion(buf) * dw;
        buf.push(next);
    }
}

/// Trapezoidal drift with an Euler predictor; the diffusion stays explicit,
/// so the limit is the Itô equation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Heun;

impl SddeScheme for Heun {
    fn name(&self) -> &'static str {
        "heun"
    }

    #[inline]
    fn step(&self, model: &CompiledModel, buf: &mut SegmentBuffer, dw: f64) {
        let x = buf.latest();
        let f0 = model.drift(buf);
        let noise = model.diffusion(buf) * dw;
        buf.push(x + model.dt * f0 + noise);
        let f1 = model.drift(buf);
        buf.replace_latest(x + 0.5 * model.dt * (f0 + f1) + noise);
    }
}

/// Name → scheme lookup.
#[derive(Clone)]
pub struct SchemeRegistry {
    schemes: BTreeMap<String, Arc<dyn SddeScheme>>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self { schemes: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("euler-maruyama", Arc::new(EulerMaruyama));
        reg.register("em", Arc::new(EulerMaruyama));
        reg.register("heun", Arc::new(Heun));
        reg
    }

    pub fn register(&mut self, name: &str, scheme: Arc<dyn SddeScheme>) {
        self.schemes.insert(name.to_ascii_lowercase(), scheme);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn SddeScheme>> {
        self.schemes.get(&name.to_ascii_lowercase()).cloned().ok_or_else(|| Error::UnknownScheme(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.schemes.keys().map(String::as_str)
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl std::fmt::Debug for SchemeRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.schemes.keys()).finish()
    }
}
