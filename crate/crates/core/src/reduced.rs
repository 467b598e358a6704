//! Delay-free reduced processes in the rotating frame, coupled to the full
//! SDDE on a single Wiener path.
//!
//! Time `t = k·dt` corresponds to fast time `k·h` with `h = r/n`, so the
//! rotation `e^{tB/ε²}` has phase `ω·k·h` and is computed from the step
//! index, reduced modulo 2π.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::initial::InitialSegment;
use crate::sdde::{Blowup, NoiseSpec, SddeConfig, SddeScheme, Stepper};
use crate::segment::{SegmentBuffer, Taps};
use crate::spectral::{phi_sup_norm, CriticalPair, Projector, Rotation, Vec2};
use crate::wiener::WienerPath;

/// The deterministic transient `𝔜ᵉ_t = T̂(t/ε²)y₀` of the initial segment's
/// stable part, tabulated per step.
#[derive(Debug, Clone)]
pub struct StableTransient {
    n: usize,
    z0: Vec2,
    /// `y₀` on the θ-grid, oldest first.
    history: Vec<f64>,
    /// Values at steps 1, 2, …; zero beyond the table.
    values: Vec<f64>,
}

impl StableTransient {
    /// Split ξ into `Φz₀ + y₀` and run the unperturbed equation from `y₀`.
    ///
    /// The table stops after `n_steps` or once fast time exceeds
    /// `max(10r, 40/κ)`, past which the transient is below rounding.
    pub fn new(
        cfg: &SddeConfig,
        pair: &CriticalPair,
        projector: &Projector,
        scheme: Arc<dyn SddeScheme>,
        n_steps: u64,
    ) -> Result<Self> {
        let n = cfg.steps_per_delay;
        let r = pair.max_delay();
        if projector.cells() != n {
            return Err(Error::InvalidArgument("projector grid differs from the run grid".into()));
        }
        if let Some(z) = in_critical_plane(&cfg.xi, pair.omega) {
            return Ok(Self { n, z0: z, history: vec![0.0; n + 1], values: Vec::new() });
        }
        let grid = SegmentBuffer::prefilled(cfg.eps, r, n, &cfg.xi)?.grid_values();
        let (z0, history) = projector.project(&grid)?;
        let fast_cut = (10.0 * r).max(40.0 / pair.decay.kappa);
        let len = n_steps.min((fast_cut * n as f64 / r).ceil() as u64) as usize;
        let linear = SddeConfig { system: cfg.system.unperturbed()?, ..cfg.clone() };
        let model = linear.compile();
        let mut buf = SegmentBuffer::from_grid(cfg.eps, r, &history)?;
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            scheme.step(&model, &mut buf, 0.0);
            values.push(buf.latest());
        }
        Ok(Self { n, z0, history, values })
    }

    /// Coordinates of the initial segment's critical part.
    pub fn z0(&self) -> Vec2 {
        self.z0
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty() && self.history.iter().all(|v| *v == 0.0)
    }

    /// `𝔜ᵉ` at step `k` (θ = 0); `k ≤ 0` reads `y₀`.
    #[inline]
    pub fn at_step(&self, k: i64) -> f64 {
        if k <= 0 {
            self.history[(self.n as i64 + k) as usize]
        } else {
            self.values.get(k as usize - 1).copied().unwrap_or(0.0)
        }
    }

    /// `sup_θ |𝔜ᵉ_t(θ)|` at step `k`.
    pub fn segment_norm(&self, k: u64) -> f64 {
        (0..=self.n as i64).map(|l| self.at_step(k as i64 - l).abs()).fold(0.0, f64::max)
    }

    pub fn initial_norm(&self) -> f64 {
        self.history.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Exact coordinates when ξ is a pure combination of the critical basis.
fn in_critical_plane(xi: &InitialSegment, omega: f64) -> Option<Vec2> {
    match *xi {
        InitialSegment::Harmonic { omega: w, z, offset }
            if offset == 0.0 && ((w - omega).abs() <= 1e-14 * omega || z == [0.0, 0.0]) =>
        {
            Some(z)
        }
        _ => None,
    }
}

#[derive(Debug, Clone)]
enum ReducedNoise {
    Additive(f64),
    Multiplicative(Taps),
}

/// Euler–Maruyama for `d𝔷 = e^{−tB/ε²}Ψ̃[G(Φe^{tB/ε²}𝔷 + 𝔜)dt + (σ | L₁(…))dW]`.
#[derive(Debug, Clone)]
pub struct ReducedStepper {
    omega: f64,
    max_delay: f64,
    phase_step: f64,
    psi: Vec2,
    dt: f64,
    nu1: Taps,
    nu3: Taps,
    noise: ReducedNoise,
    /// `Φ(θ)` at lag l: θ = −l·h.
    phi_lag: Vec<Vec2>,
    z: Vec2,
    step: u64,
    guard: f64,
    blowup: Option<Blowup>,
}

impl ReducedStepper {
    pub fn new(cfg: &SddeConfig, pair: &CriticalPair, z0: Vec2) -> Self {
        let n = cfg.steps_per_delay;
        let r = pair.max_delay();
        let h = r / n as f64;
        let sys = &cfg.system;
        Self {
            omega: pair.omega,
            max_delay: r,
            phase_step: pair.omega * h,
            psi: pair.psi_tilde,
            dt: cfg.dt(),
            nu1: Taps::compile(&sys.g.nu1, n),
            nu3: Taps::compile(&sys.g.nu3, n),
            noise: match &sys.noise {
                NoiseSpec::Additive { sigma } => ReducedNoise::Additive(*sigma),
                NoiseSpec::Multiplicative { l1 } => ReducedNoise::Multiplicative(Taps::compile(l1, n)),
            },
            phi_lag: (0..=n + 1)
                .map(|l| {
                    let (s, c) = (-pair.omega * l as f64 * h).sin_cos();
                    [c, s]
                })
                .collect(),
            z: z0,
            step: 0,
            guard: cfg.overflow_guard,
            blowup: None,
        }
    }

    #[inline]
    pub fn rotation(&self) -> Rotation {
        Rotation::from_phase(self.phase_step * self.step as f64)
    }

    /// Rotating-frame state.
    pub fn z(&self) -> Vec2 {
        self.z
    }

    /// `e^{tB/ε²}𝔷`, the state in the fixed frame.
    pub fn actual(&self) -> Vec2 {
        self.rotation().apply(self.z)
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn blowup(&self) -> Option<Blowup> {
        self.blowup
    }

    /// `sup_θ |Φ(θ)e^{tB/ε²}𝔷|`.
    pub fn critical_norm(&self) -> f64 {
        phi_sup_norm(self.omega, self.max_delay, self.actual())
    }

    #[inline]
    pub fn step(&mut self, transient: Option<&StableTransient>, dw: f64) -> bool {
        if self.blowup.is_some() {
            return false;
        }
        let rot = self.rotation();
        let u = rot.apply(self.z);
        let k = self.step as i64;
        let phi = &self.phi_lag;
        let at = |lag: usize| {
            let p = phi[lag];
            let y = transient.map_or(0.0, |tr| tr.at_step(k - lag as i64));
            p[0] * u[0] + p[1] * u[1] + y
        };
        let g = self.nu1.eval_with(at, 1) + self.nu3.eval_with(at, 3);
        let diffusion = match &self.noise {
            ReducedNoise::Additive(sigma) => *sigma,
            ReducedNoise::Multiplicative(l1) => l1.eval_with(at, 1),
        };
        let scalar = g * self.dt + diffusion * dw;
        let push = rot.apply_inverse(self.psi);
        self.z[0] += push[0] * scalar;
        self.z[1] += push[1] * scalar;
        self.step += 1;
        if !(self.z[0].abs() <= self.guard && self.z[1].abs() <= self.guard) {
            self.blowup =
                Some(Blowup { step: self.step, t: self.step as f64 * self.dt, value: self.z[0].hypot(self.z[1]) });
            return false;
        }
        true
    }
}

/// Rotating-frame series of a reduced process, sampled every `every` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPath {
    pub times: Vec<f64>,
    pub z: Vec<Vec2>,
    pub blowup: Option<Blowup>,
}

fn simulate_reduced(
    cfg: &SddeConfig,
    pair: &CriticalPair,
    transient: Option<&StableTransient>,
    z0: Vec2,
    w: &WienerPath,
    every: u64,
) -> Result<ReducedPath> {
    cfg.validate()?;
    let mut stepper = ReducedStepper::new(cfg, pair, z0);
    let mut noise = w.stream(0);
    let every = every.max(1);
    let mut times = vec![0.0];
    let mut z = vec![z0];
    for k in 1..=cfg.n_steps() {
        if !stepper.step(transient, noise.next_increment()) {
            break;
        }
        if k % every == 0 {
            times.push(k as f64 * cfg.dt());
            z.push(stepper.z());
        }
    }
    Ok(ReducedPath { times, z, blowup: stepper.blowup() })
}

/// `𝔷̂ᵉ`: the reduction that keeps the transient 𝔜ᵉ.
pub fn simulate_zhat(
    cfg: &SddeConfig,
    pair: &CriticalPair,
    transient: &StableTransient,
    w: &WienerPath,
    every: u64,
) -> Result<ReducedPath> {
    simulate_reduced(cfg, pair, Some(transient), transient.z0(), w, every)
}

/// `𝔷̃ᵉ`: the reduction that ignores the stable part entirely.
pub fn simulate_ztilde(
    cfg: &SddeConfig,
    pair: &CriticalPair,
    z0: Vec2,
    w: &WienerPath,
    every: u64,
) -> Result<ReducedPath> {
    simulate_reduced(cfg, pair, None, z0, w, every)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Full,
    Zhat,
    Ztilde,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::Full => "full",
            Component::Zhat => "zhat",
            Component::Ztilde => "ztilde",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledOptions {
    /// Projection cadence in steps.
    pub checkpoint_every: u64,
    /// Threshold `C_𝔢` of the stopping time; infinite disables it.
    pub c_e: f64,
    pub record_series: bool,
}

impl CoupledOptions {
    /// Eight checkpoints per fast period `ε²·2π/ω`.
    pub fn for_config(cfg: &SddeConfig, pair: &CriticalPair) -> Self {
        let per_period = pair.period() / (pair.max_delay() / cfg.steps_per_delay as f64);
        Self { checkpoint_every: ((per_period / 8.0).round() as u64).max(1), c_e: f64::INFINITY, record_series: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticPoint {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `‖𝒴ᵉ_t‖ = ‖yᵉ_t − 𝔜ᵉ_t‖`.
    pub y_norm: f64,
    pub h: f64,
}

/// One Wiener path driving the full SDDE and both reductions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    pub eps: f64,
    pub horizon: f64,
    pub steps: u64,
    pub sup_alpha: f64,
    pub sup_beta: f64,
    pub sup_y: f64,
    /// `sup_t |X − (Φ(0)e^{tB/ε²}𝔷̂ + 𝔜(0))|`.
    pub sup_err_hat: f64,
    /// `sup_t |X − (Φ(0)e^{tB/ε²}𝔷̃ + 𝔜(0))|`.
    pub sup_err_tilde: f64,
    /// Stopping time 𝔢ᵉ, if reached before the horizon.
    pub e_time: Option<f64>,
    pub stopped_sup_alpha: f64,
    pub stopped_sup_y: f64,
    /// `sup_t ‖Φe^{tB/ε²}𝔷̂ᵉ_t‖`.
    pub sup_zhat_norm: f64,
    pub c_e: f64,
    /// Increments consumed by the full run, 𝔷̂ᵉ and 𝔷̃ᵉ.
    pub increments: [u64; 3],
    pub blowup: Option<(Component, Blowup)>,
    /// Fixed-frame coordinates of the full run at the last step.
    pub final_z: Vec2,
    pub series: Vec<DiagnosticPoint>,
}

impl CoupledRun {
    pub fn final_h(&self) -> f64 {
        0.5 * (self.final_z[0].powi(2) + self.final_z[1].powi(2))
    }
}

struct Checkpoint {
    z: Vec2,
    alpha: f64,
    y_norm: f64,
    h: f64,
    crit: f64,
}

fn checkpoint(
    full: &mut Stepper,
    zhat: &ReducedStepper,
    projector: &Projector,
    transient: &StableTransient,
) -> Result<Checkpoint> {
    let n = projector.cells();
    let k = full.step_index() as i64;
    let grid = full.grid_values();
    let (z, _) = projector.project_norm(grid)?;
    let frame = zhat.rotation().apply_inverse(z);
    let zh = zhat.z();
    let alpha = 0.5 * ((frame[0] - zh[0]).powi(2) + (frame[1] - zh[1]).powi(2));
    let basis = projector.basis_samples(z);
    let y_norm = grid
        .iter()
        .zip(&basis)
        .enumerate()
        .map(|(j, (x, p))| (x - p - transient.at_step(k - (n - j) as i64)).abs())
        .fold(0.0, f64::max);
    Ok(Checkpoint {
        z,
        alpha,
        y_norm,
        h: 0.5 * (z[0] * z[0] + z[1] * z[1]),
        crit: phi_sup_norm(projector.omega(), projector.max_delay(), z),
    })
}

impl CoupledRun {
    fn record(&mut self, c: &Checkpoint, t: f64, beta: f64, opts: &CoupledOptions) {
        self.sup_alpha = self.sup_alpha.max(c.alpha);
        self.sup_y = self.sup_y.max(c.y_norm);
        if self.e_time.is_none() {
            self.stopped_sup_alpha = self.stopped_sup_alpha.max(c.alpha);
            self.stopped_sup_y = self.stopped_sup_y.max(c.y_norm);
            if c.crit >= opts.c_e {
                self.e_time = Some(t);
            }
        }
        if opts.record_series {
            self.series.push(DiagnosticPoint { t, alpha: c.alpha, beta, y_norm: c.y_norm, h: c.h });
        }
        self.final_z = c.z;
    }
}

pub fn coupled_run(
    cfg: &SddeConfig,
    pair: &CriticalPair,
    scheme: Arc<dyn SddeScheme>,
    w: &WienerPath,
    opts: &CoupledOptions,
) -> Result<CoupledRun> {
    let dt = cfg.dt();
    if ((w.dt() - dt) / dt).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("Wiener step {} does not match the integration step {dt}", w.dt())));
    }
    cfg.check_stability(Some(pair.omega))?;
    let n_steps = cfg.n_steps();
    let projector = pair.projector(cfg.steps_per_delay)?;
    let transient = StableTransient::new(cfg, pair, &projector, scheme.clone(), n_steps)?;
    let z0 = transient.z0();
    let tr = (!transient.is_zero()).then_some(&transient);

    let mut full = Stepper::new(cfg, scheme)?;
    let mut zhat = ReducedStepper::new(cfg, pair, z0);
    let mut ztilde = ReducedStepper::new(cfg, pair, z0);
    let mut noise = w.stream(0);
    let mut increments = [0u64; 3];
    let track_e = opts.c_e.is_finite();
    let every = opts.checkpoint_every.max(1);

    let mut run = CoupledRun {
        eps: cfg.eps,
        horizon: cfg.horizon,
        steps: 0,
        sup_alpha: 0.0,
        sup_beta: 0.0,
        sup_y: 0.0,
        sup_err_hat: 0.0,
        sup_err_tilde: 0.0,
        e_time: None,
        stopped_sup_alpha: 0.0,
        stopped_sup_y: 0.0,
        sup_zhat_norm: if track_e { zhat.critical_norm() } else { 0.0 },
        c_e: opts.c_e,
        increments,
        blowup: None,
        final_z: z0,
        series: Vec::new(),
    };
    let c = checkpoint(&mut full, &zhat, &projector, &transient)?;
    run.record(&c, 0.0, 0.0, opts);

    for k in 1..=n_steps {
        let dw = noise.next_increment();
        let ok_full = full.step(dw);
        increments[0] += 1;
        let ok_hat = zhat.step(tr, dw);
        increments[1] += 1;
        let ok_tilde = ztilde.step(None, dw);
        increments[2] += 1;
        run.steps = k;
        if !(ok_full && ok_hat && ok_tilde) {
            run.blowup = if let Some(b) = full.blowup() {
                Some((Component::Full, b))
            } else if let Some(b) = zhat.blowup() {
                Some((Component::Zhat, b))
            } else {
                ztilde.blowup().map(|b| (Component::Ztilde, b))
            };
            break;
        }

        let x = full.value();
        let y0 = transient.at_step(k as i64);
        let hat = zhat.actual();
        let tilde = ztilde.actual();
        run.sup_err_hat = run.sup_err_hat.max((x - hat[0] - y0).abs());
        run.sup_err_tilde = run.sup_err_tilde.max((x - tilde[0] - y0).abs());
        let (zh, zt) = (zhat.z(), ztilde.z());
        let beta = 0.5 * ((zh[0] - zt[0]).powi(2) + (zh[1] - zt[1]).powi(2));
        run.sup_beta = run.sup_beta.max(beta);
        if track_e {
            run.sup_zhat_norm = run.sup_zhat_norm.max(zhat.critical_norm());
        }
        if k % every == 0 || k == n_steps {
            let c = checkpoint(&mut full, &zhat, &projector, &transient)?;
            run.record(&c, full.time(), beta, opts);
        }
    }
    run.increments = increments;
    Ok(run)
}

/// Stopped quantities of one run for the threshold it was run with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingDiagnostics {
    /// `𝔢ᵉ ∧ T`.
    pub e_eps: f64,
    pub stopped: bool,
    pub sup_y: f64,
    pub sup_alpha: f64,
    /// Event `sup_t ‖Φe^{tB/ε²}𝔷̂ᵉ_t‖ < 0.99 C_𝔢`.
    pub in_event: bool,
}

pub fn stopping_diagnostics(run: &CoupledRun) -> StoppingDiagnostics {
    StoppingDiagnostics {
        e_eps: run.e_time.unwrap_or(run.horizon),
        stopped: run.e_time.is_some(),
        sup_y: run.stopped_sup_y,
        sup_alpha: run.stopped_sup_alpha,
        in_event: run.blowup.is_none() && run.sup_zhat_norm < 0.99 * run.c_e,
    }
}

/// Associative accumulator of coupled-run suprema over an ensemble.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnsembleStats {
    pub n_paths: u64,
    pub n_blowup: u64,
    pub sum_sup_alpha_sq: f64,
    pub sum_sup_beta_sq: f64,
    pub sum_sup_y: f64,
    pub sum_sup_err_hat4: f64,
    pub sum_sup_err_tilde4: f64,
    pub n_event: u64,
}

impl EnsembleStats {
    /// Blown-up paths are counted but excluded from the means.
    pub fn add(&mut self, run: &CoupledRun) {
        if run.blowup.is_some() {
            self.n_blowup += 1;
            return;
        }
        self.n_paths += 1;
        self.sum_sup_alpha_sq += run.sup_alpha * run.sup_alpha;
        self.sum_sup_beta_sq += run.sup_beta * run.sup_beta;
        self.sum_sup_y += run.sup_y;
        self.sum_sup_err_hat4 += run.sup_err_hat.powi(4);
        self.sum_sup_err_tilde4 += run.sup_err_tilde.powi(4);
        self.n_event += u64::from(stopping_diagnostics(run).in_event);
    }

    pub fn merge(mut self, other: &Self) -> Self {
        self.n_paths += other.n_paths;
        self.n_blowup += other.n_blowup;
        self.sum_sup_alpha_sq += other.sum_sup_alpha_sq;
        self.sum_sup_beta_sq += other.sum_sup_beta_sq;
        self.sum_sup_y += other.sum_sup_y;
        self.sum_sup_err_hat4 += other.sum_sup_err_hat4;
        self.sum_sup_err_tilde4 += other.sum_sup_err_tilde4;
        self.n_event += other.n_event;
        self
    }

    fn mean(&self, sum: f64) -> f64 {
        if self.n_paths == 0 {
            f64::NAN
        } else {
            sum / self.n_paths as f64
        }
    }

    pub fn mean_sup_alpha_sq(&self) -> f64 {
        self.mean(self.sum_sup_alpha_sq)
    }

    pub fn mean_sup_beta_sq(&self) -> f64 {
        self.mean(self.sum_sup_beta_sq)
    }

    pub fn mean_sup_y(&self) -> f64 {
        self.mean(self.sum_sup_y)
    }

    pub fn mean_sup_err_hat4(&self) -> f64 {
        self.mean(self.sum_sup_err_hat4)
    }

    pub fn mean_sup_err_tilde4(&self) -> f64 {
        self.mean(self.sum_sup_err_tilde4)
    }

    /// Fraction of all paths, blown-up ones included, lying in the event.
    pub fn p_event(&self) -> f64 {
        let total = self.n_paths + self.n_blowup;
        if total == 0 {
            f64::NAN
        } else {
            self.n_event as f64 / total as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{LinearFunctional, Nonlinearity};
    use crate::sdde::{SchemeRegistry, SddeSystem};
    use crate::spectral::SpectralOptions;
    use std::f64::consts::FRAC_PI_2;

    fn pair() -> CriticalPair {
        let l0 = LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap();
        CriticalPair::analyze(&l0, &SpectralOptions::default()).unwrap()
    }

    fn config(noise: NoiseSpec, xi: InitialSegment, eps: f64) -> SddeConfig {
        let sys = SddeSystem::new(
            LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap(),
            Nonlinearity::zero(1.0).unwrap(),
            noise,
        )
        .unwrap();
        SddeConfig::new(sys, eps, 0.2, xi).with_steps_per_delay(64)
    }

    #[test]
    fn deterministic_reduction_is_constant() {
        let pair = pair();
        let cfg = config(NoiseSpec::Additive { sigma: 0.0 }, InitialSegment::constant(1.0), 0.2);
        let w = WienerPath::new(0, cfg.dt()).unwrap();
        let projector = pair.projector(64).unwrap();
        let heun = SchemeRegistry::builtin().get("heun").unwrap();
        let tr = StableTransient::new(&cfg, &pair, &projector, heun, cfg.n_steps()).unwrap();
        let path = simulate_zhat(&cfg, &pair, &tr, &w, 10).unwrap();
        assert!(path.z.iter().all(|z| *z == tr.z0()));
        let tilde = simulate_ztilde(&cfg, &pair, tr.z0(), &w, 10).unwrap();
        assert_eq!(path, tilde);
    }

    #[test]
    fn transient_decays() {
        let pair = pair();
        let cfg = config(NoiseSpec::Additive { sigma: 0.0 }, InitialSegment::constant(1.0), 0.2);
        let projector = pair.projector(64).unwrap();
        let heun = SchemeRegistry::builtin().get("heun").unwrap();
        let tr = StableTransient::new(&cfg, &pair, &projector, heun, 64 * 30).unwrap();
        let y0 = tr.initial_norm();
        assert!(y0 > 0.1);
        // Down to the O(h²) mismatch between the grid's critical mode and Φ.
        assert!(tr.segment_norm(64 * 10) < 1e-3 * y0);
        assert!(tr.segment_norm(64 * 3) < tr.segment_norm(64));
    }

    #[test]
    fn critical_initial_segment_has_no_transient() {
        let pair = pair();
        let cfg = config(NoiseSpec::Additive { sigma: 1.0 }, InitialSegment::cosine(FRAC_PI_2, 1.2), 0.2);
        let projector = pair.projector(64).unwrap();
        let heun = SchemeRegistry::builtin().get("heun").unwrap();
        let tr = StableTransient::new(&cfg, &pair, &projector, heun.clone(), cfg.n_steps()).unwrap();
        assert!(tr.is_zero());
        assert_eq!(tr.z0(), [1.2, 0.0]);
        let w = WienerPath::new(5, cfg.dt()).unwrap();
        let run = coupled_run(&cfg, &pair, heun, &w, &CoupledOptions::for_config(&cfg, &pair)).unwrap();
        assert_eq!(run.sup_beta, 0.0);
        assert_eq!(run.increments, [cfg.n_steps(); 3]);
    }

    #[test]
    fn noise_free_critical_run_is_at_discretization_floor() {
        let pair = pair();
        let cfg = config(NoiseSpec::Additive { sigma: 0.0 }, InitialSegment::cosine(FRAC_PI_2, 1.0), 0.2)
            .with_steps_per_delay(256);
        let w = WienerPath::new(5, cfg.dt()).unwrap();
        let heun = SchemeRegistry::builtin().get("heun").unwrap();
        let mut opts = CoupledOptions::for_config(&cfg, &pair);
        opts.record_series = true;
        let run = coupled_run(&cfg, &pair, heun, &w, &opts).unwrap();
        assert!(run.sup_alpha < 1e-8, "{}", run.sup_alpha);
        assert!(run.sup_err_hat < 1e-4, "{}", run.sup_err_hat);
        assert!(run.sup_y < 1e-4);
        assert!(run.series.iter().all(|p| (p.h - 0.5).abs() < 1e-4));
    }

    #[test]
    fn infinite_threshold_never_stops() {
        let pair = pair();
        let cfg = config(NoiseSpec::Additive { sigma: 1.0 }, InitialSegment::constant(0.5), 0.2);
        let w = WienerPath::new(11, cfg.dt()).unwrap();
        let heun = SchemeRegistry::builtin().get("heun").unwrap();
        let run = coupled_run(&cfg, &pair, heun, &w, &CoupledOptions::for_config(&cfg, &pair)).unwrap();
        let d = stopping_diagnostics(&run);
        assert!(!d.stopped);
        assert_eq!(d.e_eps, cfg.horizon);
        assert_eq!(d.sup_y, run.sup_y);
        assert_eq!(d.sup_alpha, run.sup_alpha);
        assert!(d.in_event);
    }

    #[test]
    fn deterministic_crossing_sets_stopping_time() {
        // Linear growth G = 0.8·η(0) makes the critical norm increase monotonically.
        let pair = pair();
        let sys = SddeSystem::new(
            LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap(),
            Nonlinearity::new(LinearFunctional::point(1.0, 0.0, 3.0).unwrap(), LinearFunctional::zero(1.0).unwrap()),
            NoiseSpec::Additive { sigma: 0.0 },
        )
        .unwrap();
        let cfg = SddeConfig::new(sys, 0.2, 1.0, InitialSegment::cosine(FRAC_PI_2, 1.0)).with_steps_per_delay(64);
        let w = WienerPath::new(1, cfg.dt()).unwrap();
        let mut opts = CoupledOptions::for_config(&cfg, &pair);
        opts.c_e = 2.0;
        opts.record_series = true;
        let heun = SchemeRegistry::builtin().get("heun").unwrap();
        let run = coupled_run(&cfg, &pair, heun, &w, &opts).unwrap();
        let e = run.e_time.expect("threshold crossed");
        // ‖Φz‖ ≤ ‖z‖₂, so the crossing cannot precede √(2H) reaching C_e.
        let at = run.series.iter().position(|p| p.t == e).expect("crossing on a checkpoint");
        assert!(at > 0 && (2.0 * run.series[at].h).sqrt() >= 2.0);
        assert!((2.0 * run.series[at - 1].h).sqrt() < 2.0 * 1.2);
        assert!(e < 1.0);
    }
}
