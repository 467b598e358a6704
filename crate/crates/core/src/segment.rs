//! History storage for the rescaled segment `Π̂ᵉ_t X(θ) = X(t + ε²θ)`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::functional::LinearFunctional;
use crate::initial::InitialSegment;

const GRID_TOL: f64 = 1e-9;

/// Uniformly sampled history covering `[t − ε²r, t]`.
///
/// Samples are spaced `dt = ε²r/n`, so the θ-grid `−r + j·r/n` lands on
/// stored points. The buffer holds exactly `n + 1` samples.
#[derive(Debug, Clone)]
pub struct SegmentBuffer {
    eps: f64,
    max_delay: f64,
    steps_per_delay: usize,
    dt: f64,
    step: u64,
    samples: VecDeque<f64>,
}

impl SegmentBuffer {
    pub fn new(eps: f64, max_delay: f64, steps_per_delay: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) || !(max_delay > 0.0 && max_delay.is_finite()) {
            return Err(Error::InvalidArgument(format!("need eps > 0 and r > 0, got eps = {eps}, r = {max_delay}")));
        }
        if steps_per_delay < 3 {
            return Err(Error::InvalidArgument(format!("need at least 3 steps per delay, got {steps_per_delay}")));
        }
        Ok(Self {
            eps,
            max_delay,
            steps_per_delay,
            dt: eps * eps * max_delay / steps_per_delay as f64,
            step: 0,
            samples: VecDeque::with_capacity(steps_per_delay + 1),
        })
    }

    /// Buffer at t = 0 filled from the unscaled initial segment ξ on `[−r, 0]`.
    pub fn prefilled(eps: f64, max_delay: f64, steps_per_delay: usize, xi: &InitialSegment) -> Result<Self> {
        let mut buf = Self::new(eps, max_delay, steps_per_delay)?;
        let n = steps_per_delay;
        let h = max_delay / n as f64;
        buf.samples.extend((0..=n).map(|j| if j == n { xi.value(0.0) } else { xi.value(j as f64 * h - max_delay) }));
        Ok(buf)
    }

    /// Buffer at t = 0 from explicit θ-grid values, oldest first.
    pub fn from_grid(eps: f64, max_delay: f64, values: &[f64]) -> Result<Self> {
        let mut buf = Self::new(eps, max_delay, values.len().saturating_sub(1))?;
        buf.samples.extend(values.iter().copied());
        Ok(buf)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn max_delay(&self) -> f64 {
        self.max_delay
    }

    pub fn steps_per_delay(&self) -> usize {
        self.steps_per_delay
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn latest(&self) -> f64 {
        *self.samples.back().expect("buffer is prefilled")
    }

    /// Append `X(t + dt)` and drop samples older than the window.
    pub fn push(&mut self, value: f64) {
        if self.samples.len() == self.steps_per_delay + 1 {
            self.samples.pop_front();
        }
        self.samples.push_back(value);
        self.step += 1;
    }

    pub fn replace_latest(&mut self, value: f64) {
        *self.samples.back_mut().expect("buffer is prefilled") = value;
    }

    /// Sample `lag` grid steps before the latest one.
    #[inline]
    pub fn at_lag(&self, lag: usize) -> f64 {
        self.samples[self.samples.len() - 1 - lag]
    }

    /// `X(t + ε²θ)`, linearly interpolated; exact at grid points.
    pub fn sample(&self, theta: f64) -> Result<f64> {
        let pos = -theta * self.steps_per_delay as f64 / self.max_delay;
        let lag = pos.round();
        let available = (self.samples.len() - 1) as f64;
        if pos < -GRID_TOL || pos > available + GRID_TOL {
            return Err(Error::OutOfWindow {
                t: self.time() + self.eps * self.eps * theta,
                oldest: self.time() - available * self.dt,
            });
        }
        if (pos - lag).abs() < GRID_TOL {
            return Ok(self.at_lag(lag as usize));
        }
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        Ok((1.0 - frac) * self.at_lag(lo) + frac * self.at_lag(lo + 1))
    }

    /// Segment values on `θ_j = −r + j·r/n`, oldest first.
    pub fn grid_values(&self) -> Vec<f64> {
        self.samples.iter().copied().collect()
    }

    pub fn copy_grid_into(&self, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.samples.iter().copied());
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// `Σ c_k · sample(θ_k)^power` for the atoms of `spec`.
pub fn apply_functional(spec: &LinearFunctional, buf: &SegmentBuffer, power: i32) -> Result<f64> {
    spec.atoms().map(|a| Ok(a.weight * buf.sample(a.theta)?.powi(power))).sum()
}

/// One atom resolved against a grid: value at `lag + frac` steps back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub lag: usize,
    pub frac: f64,
    pub weight: f64,
}

/// A functional precompiled for a grid with `n` steps per delay, for use
/// in stepping loops.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Taps {
    taps: Vec<Tap>,
}

impl Taps {
    pub fn compile(spec: &LinearFunctional, steps_per_delay: usize) -> Self {
        let scale = steps_per_delay as f64 / spec.max_delay();
        let mut taps: Vec<Tap> = Vec::new();
        for atom in spec.atoms().filter(|a| a.weight != 0.0) {
            let pos = -atom.theta * scale;
            let rounded = pos.round();
            let (lag, frac) = if (pos - rounded).abs() < GRID_TOL {
                (rounded as usize, 0.0)
            } else {
                (pos.floor() as usize, pos - pos.floor())
            };
            match taps.iter_mut().find(|t| t.lag == lag && t.frac == frac) {
                Some(t) => t.weight += atom.weight,
                None => taps.push(Tap { lag, frac, weight: atom.weight }),
            }
        }
        Self { taps }
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    /// Largest lag read, including the interpolation neighbour.
    pub fn reach(&self) -> usize {
        self.taps.iter().map(|t| t.lag + usize::from(t.frac > 0.0)).max().unwrap_or(0)
    }

    /// Whether any tap reads the newest sample.
    pub fn reads_current(&self) -> bool {
        self.taps.iter().any(|t| t.lag == 0)
    }

    /// Evaluate against an arbitrary lag accessor.
    #[inline]
    pub fn eval_with(&self, at: impl Fn(usize) -> f64, power: i32) -> f64 {
        let mut acc = 0.0;
        for t in &self.taps {
            let x = if t.frac == 0.0 { at(t.lag) } else { (1.0 - t.frac) * at(t.lag) + t.frac * at(t.lag + 1) };
            acc += t.weight
                * match power {
                    1 => x,
                    3 => x * x * x,
                    p => x.powi(p),
                };
        }
        acc
    }

    #[inline]
    pub fn eval(&self, buf: &SegmentBuffer, power: i32) -> f64 {
        self.eval_with(|lag| buf.at_lag(lag), power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Atom;
    use std::f64::consts::FRAC_PI_2;

    fn ramp(eps: f64, n: usize, steps: usize) -> SegmentBuffer {
        let mut buf = SegmentBuffer::new(eps, 1.0, n).unwrap();
        let dt = buf.dt();
        buf.samples.extend((0..=n).map(|j| (j as f64 - n as f64) * dt));
        for _ in 0..steps {
            let next = buf.latest() + dt;
            buf.push(next);
        }
        buf
    }

    #[test]
    fn constant_history() {
        let buf = SegmentBuffer::prefilled(0.1, 1.0, 50, &InitialSegment::constant(2.5)).unwrap();
        for th in [0.0, -0.013, -0.5, -1.0] {
            assert_eq!(buf.sample(th).unwrap(), 2.5);
        }
        assert_eq!(buf.sup_norm(), 2.5);
    }

    #[test]
    fn linear_history_is_exact() {
        let eps = 0.2;
        let buf = ramp(eps, 40, 17);
        let now = buf.time();
        for th in [0.0, -0.0137, -0.333, -0.999, -1.0] {
            let want = now + eps * eps * th;
            assert!((buf.sample(th).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn out_of_window() {
        let buf = ramp(0.1, 10, 0);
        assert!(matches!(buf.sample(-1.2), Err(Error::OutOfWindow { .. })));
        assert!(buf.sample(0.1).is_err());
    }

    #[test]
    fn ramp_sup_norm() {
        let buf =
            SegmentBuffer::prefilled(0.5, 1.0, 20, &InitialSegment::Linear { slope: 1.0, intercept: 1.0 }).unwrap();
        assert_eq!(buf.sup_norm(), 1.0);
    }

    #[test]
    fn functionals_on_constant_segment() {
        let buf = SegmentBuffer::prefilled(0.3, 1.0, 30, &InitialSegment::constant(1.5)).unwrap();
        let l0 = LinearFunctional::point(1.0, -1.0, -FRAC_PI_2).unwrap();
        assert!((apply_functional(&l0, &buf, 1).unwrap() + FRAC_PI_2 * 1.5).abs() < 1e-15);
        let g = LinearFunctional::point(1.0, -1.0, 0.7).unwrap();
        assert!((apply_functional(&g, &buf, 3).unwrap() - 0.7 * 1.5f64.powi(3)).abs() < 1e-15);
        let zero = LinearFunctional::zero(1.0).unwrap();
        assert_eq!(apply_functional(&zero, &buf, 1).unwrap(), 0.0);
    }

    #[test]
    fn taps_agree_with_sampling() {
        let spec = LinearFunctional::new(
            1.0,
            vec![Atom::new(-1.0, 0.4), Atom::new(-0.3071, -1.2), Atom::new(0.0, 0.5)],
            vec![Atom::new(-0.5, 0.25)],
        )
        .unwrap();
        let buf = SegmentBuffer::prefilled(0.1, 1.0, 64, &InitialSegment::cosine(2.0, 1.3)).unwrap();
        let taps = Taps::compile(&spec, 64);
        for p in [1, 3] {
            let a = taps.eval(&buf, p);
            let b = apply_functional(&spec, &buf, p).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(taps.reach(), 64);
        assert!(taps.reads_current());
    }

    #[test]
    fn cosine_history_interpolation_is_second_order() {
        let omega = FRAC_PI_2;
        let err = |n: usize| {
            let xi = InitialSegment::cosine(omega, 1.0);
            let buf = SegmentBuffer::prefilled(0.1, 1.0, n, &xi).unwrap();
            (0..200)
                .map(|i| {
                    let th = -(i as f64 + 0.37) / 200.0;
                    (buf.sample(th).unwrap() - (omega * th).cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(20) / err(40);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}
