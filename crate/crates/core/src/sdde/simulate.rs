use std::sync::Arc;

use super::scheme::{CompiledModel, SddeScheme};
use super::SddeConfig;
use crate::error::{Error, Result};
use crate::segment::SegmentBuffer;
use crate::spectral::{Projector, Vec2};
use crate::wiener::WienerPath;

/// First step at which `|X|` exceeded the overflow guard or went non-finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blowup {
    pub step: u64,
    pub t: f64,
    pub value: f64,
}

/// Advances one path of the SDDE step by step.
pub struct Stepper {
    model: CompiledModel,
    scheme: Arc<dyn SddeScheme>,
    buf: SegmentBuffer,
    guard: f64,
    blowup: Option<Blowup>,
    scratch: Vec<f64>,
}

impl Stepper {
    pub fn new(cfg: &SddeConfig, scheme: Arc<dyn SddeScheme>) -> Result<Self> {
        cfg.validate()?;
        let buf = SegmentBuffer::prefilled(cfg.eps, cfg.system.max_delay(), cfg.steps_per_delay, &cfg.xi)?;
        Ok(Self {
            model: cfg.compile(),
            scheme,
            buf,
            guard: cfg.overflow_guard,
            blowup: None,
            scratch: Vec::with_capacity(cfg.steps_per_delay + 1),
        })
    }

    /// Returns false once the path has blown up; later calls do nothing.
    #[inline]
    pub fn step(&mut self, dw: f64) -> bool {
        if self.blowup.is_some() {
            return false;
        }
        self.scheme.step(&self.model, &mut self.buf, dw);
        let x = self.buf.latest();
        if !(x.abs() <= self.guard) {
            self.blowup = Some(Blowup { step: self.buf.step_index(), t: self.buf.time(), value: x });
            return false;
        }
        true
    }

    pub fn buffer(&self) -> &SegmentBuffer {
        &self.buf
    }

    pub fn into_buffer(self) -> SegmentBuffer {
        self.buf
    }

    pub fn blowup(&self) -> Option<Blowup> {
        self.blowup
    }

    pub fn value(&self) -> f64 {
        self.buf.latest()
    }

    pub fn time(&self) -> f64 {
        self.buf.time()
    }

    pub fn step_index(&self) -> u64 {
        self.buf.step_index()
    }

    /// Critical coordinates and `‖y‖` of the current segment.
    pub fn project(&mut self, projector: &Projector) -> Result<(Vec2, f64)> {
        self.buf.copy_grid_into(&mut self.scratch);
        projector.project_norm(&self.scratch)
    }

    pub fn grid_values(&mut self) -> &[f64] {
        self.buf.copy_grid_into(&mut self.scratch);
        &self.scratch
    }
}

/// Recorded path: `values[k] = X(k·stride·dt)`. With stride 1 the initial
/// θ-grid before t = 0 is kept so every segment can be rebuilt.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub stride: usize,
    pub history: Vec<f64>,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| (k * self.stride) as f64 * self.dt)
    }

    /// Grid values of the segment at recorded step `k` (stride 1 only).
    pub fn segment(&self, k: usize) -> Option<Vec<f64>> {
        if self.stride != 1 || k >= self.values.len() {
            return None;
        }
        let n = self.history.len();
        let mut seg = Vec::with_capacity(n + 1);
        if k < n {
            seg.extend_from_slice(&self.history[k..]);
            seg.extend_from_slice(&self.values[..=k]);
        } else {
            seg.extend_from_slice(&self.values[k - n..=k]);
        }
        Some(seg)
    }
}

#[derive(Debug, Clone)]
pub struct SddeRun {
    pub trajectory: Trajectory,
    pub buffer: SegmentBuffer,
    pub blowup: Option<Blowup>,
}

/// Integrate over `[0, horizon]`, recording every `record_every`-th step.
pub fn simulate_sdde(
    cfg: &SddeConfig,
    scheme: Arc<dyn SddeScheme>,
    w: &WienerPath,
    record_every: usize,
) -> Result<SddeRun> {
    let dt = cfg.dt();
    if ((w.dt() - dt) / dt).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("Wiener step {} does not match the integration step {dt}", w.dt())));
    }
    cfg.check_stability(None)?;
    let stride = record_every.max(1);
    let mut stepper = Stepper::new(cfg, scheme)?;
    let grid = stepper.buffer().grid_values();
    let history = if stride == 1 { grid[..grid.len() - 1].to_vec() } else { Vec::new() };
    let n_steps = cfg.n_steps();
    let mut values = Vec::with_capacity((n_steps as usize) / stride + 1);
    values.push(stepper.value());
    let mut noise = w.stream(0);
    for k in 1..=n_steps {
        if !stepper.step(noise.next_increment()) {
            break;
        }
        if (k as usize).is_multiple_of(stride) {
            values.push(stepper.value());
        }
    }
    let blowup = stepper.blowup();
    Ok(SddeRun { trajectory: Trajectory { dt, stride, history, values }, buffer: stepper.into_buffer(), blowup })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionPoint {
    pub t: f64,
    pub z: Vec2,
    pub y_norm: f64,
    /// `½‖z‖₂²`.
    pub h: f64,
}

/// Project every `every`-th recorded segment of a dense trajectory.
pub fn project_trajectory(traj: &Trajectory, projector: &Projector, every: usize) -> Result<Vec<ProjectionPoint>> {
    if traj.stride != 1 || traj.history.len() != projector.cells() {
        return Err(Error::InvalidArgument("projection needs a dense trajectory on the projector's grid".into()));
    }
    (0..traj.values.len())
        .step_by(every.max(1))
        .map(|k| {
            let seg = traj.segment(k).expect("dense trajectory");
            let (z, y_norm) = projector.project_norm(&seg)?;
            Ok(ProjectionPoint { t: k as f64 * traj.dt, z, y_norm, h: 0.5 * (z[0] * z[0] + z[1] * z[1]) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{LinearFunctional, Nonlinearity};
    use crate::initial::InitialSegment;
    use crate::sdde::{NoiseSpec, SchemeRegistry, SddeSystem};
    use std::f64::consts::FRAC_PI_2;

    fn system(sigma: f64) -> SddeSystem {
        SddeSystem::new(
            LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap(),
            Nonlinearity::zero(1.0).unwrap(),
            NoiseSpec::Additive { sigma },
        )
        .unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let cfg = SddeConfig::new(system(0.0), 0.2, 0.5, InitialSegment::constant(0.0)).with_steps_per_delay(32);
        let w = WienerPath::new(1, cfg.dt()).unwrap();
        let run = simulate_sdde(&cfg, SchemeRegistry::builtin().get("em").unwrap(), &w, 1).unwrap();
        assert!(run.trajectory.values.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn critical_cosine_rotates() {
        let eps = 0.2;
        let cfg = SddeConfig::new(system(0.0), eps, 0.4, InitialSegment::cosine(FRAC_PI_2, 1.0));
        let w = WienerPath::new(1, cfg.dt()).unwrap();
        // Explicit Euler shifts the critical pair off the axis by O(dt/ε²).
        for (name, tol) in [("heun", 1e-3), ("em", 0.05)] {
            let run = simulate_sdde(&cfg, SchemeRegistry::builtin().get(name).unwrap(), &w, 1).unwrap();
            let err = run
                .trajectory
                .times()
                .zip(&run.trajectory.values)
                .map(|(t, x)| (x - (FRAC_PI_2 * t / (eps * eps)).cos()).abs())
                .fold(0.0, f64::max);
            assert!(err < tol, "{name}: {err}");
        }
    }

    #[test]
    fn segment_reconstruction() {
        let cfg = SddeConfig::new(system(1.0), 0.3, 0.05, InitialSegment::constant(0.5)).with_steps_per_delay(16);
        let w = WienerPath::new(3, cfg.dt()).unwrap();
        let run = simulate_sdde(&cfg, SchemeRegistry::builtin().get("heun").unwrap(), &w, 1).unwrap();
        let last = run.trajectory.values.len() - 1;
        assert_eq!(run.trajectory.segment(last).unwrap(), run.buffer.grid_values());
        assert_eq!(run.trajectory.segment(0).unwrap(), vec![0.5; 17]);
    }

    #[test]
    fn blowup_is_reported() {
        let nu3 = LinearFunctional::point(1.0, 0.0, 50.0).unwrap();
        let sys = SddeSystem::new(
            LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap(),
            Nonlinearity::new(LinearFunctional::zero(1.0).unwrap(), nu3),
            NoiseSpec::Additive { sigma: 0.0 },
        )
        .unwrap();
        let cfg = SddeConfig::new(sys, 0.5, 5.0, InitialSegment::constant(3.0)).with_steps_per_delay(64);
        let w = WienerPath::new(1, cfg.dt()).unwrap();
        let run = simulate_sdde(&cfg, SchemeRegistry::builtin().get("heun").unwrap(), &w, 10).unwrap();
        let b = run.blowup.expect("cubic growth must overflow");
        assert!(b.t < 5.0 && !(b.value.abs() <= 1e6));
    }

    #[test]
    fn mismatched_wiener_step() {
        let cfg = SddeConfig::new(system(1.0), 0.3, 0.05, InitialSegment::constant(0.5));
        let w = WienerPath::new(3, cfg.dt() * 2.0).unwrap();
        assert!(simulate_sdde(&cfg, SchemeRegistry::builtin().get("heun").unwrap(), &w, 1).is_err());
    }
}
