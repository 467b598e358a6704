//! Seeded, replayable Wiener increments.
//!
//! Driver `d` of a path with seed `s` is the ChaCha8 stream `d` keyed by
//! `s`. Each pair of consecutive 64-bit words becomes two standard normals
//! by Box–Muller, so increment `k` of the base resolution sits at word
//! position `4·⌊k/2⌋`. A path coarsened by factor `f` has increments that
//! are sums of `f` consecutive base increments; the path at the coarse step
//! and the summed fine path are therefore the same Brownian sample.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerPath {
    seed: u64,
    base_dt: f64,
    factor: usize,
}

impl WienerPath {
    pub fn new(seed: u64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("Wiener step must be positive, got {dt}")));
        }
        Ok(Self { seed, base_dt: dt, factor: 1 })
    }

    /// The same Brownian sample read at `factor` times the current step.
    pub fn coarsened(&self, factor: usize) -> Self {
        Self { factor: self.factor * factor.max(1), ..*self }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.base_dt * self.factor as f64
    }

    pub fn base_dt(&self) -> f64 {
        self.base_dt
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    /// Sequential increments of driver `dim`.
    pub fn stream(&self, dim: u64) -> WienerStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(dim);
        WienerStream { rng, spare: None, scale: self.base_dt.sqrt(), factor: self.factor, consumed: 0 }
    }

    /// Increment `k` of driver `dim`, by random access.
    pub fn increment(&self, dim: u64, k: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(dim);
        let first = k * self.factor as u64;
        rng.set_word_pos(4 * u128::from(first / 2));
        let mut stream = WienerStream { rng, spare: None, scale: self.base_dt.sqrt(), factor: 1, consumed: 0 };
        if first % 2 == 1 {
            stream.normal();
        }
        (0..self.factor).map(|_| stream.normal()).sum::<f64>() * stream.scale
    }
}

#[derive(Debug, Clone)]
pub struct WienerStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
    scale: f64,
    factor: usize,
    consumed: u64,
}

impl WienerStream {
    fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let rad = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(rad * s);
        rad * c
    }

    /// Next increment at the path's step.
    pub fn next_increment(&mut self) -> f64 {
        self.consumed += 1;
        let mut sum = 0.0;
        for _ in 0..self.factor {
            sum += self.normal();
        }
        sum * self.scale
    }

    /// Increments handed out so far.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }
}

impl Iterator for WienerStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_increment())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_is_identical() {
        let w = WienerPath::new(42, 1e-3).unwrap();
        let a: Vec<f64> = w.stream(0).take(1000).collect();
        let b: Vec<f64> = w.stream(0).take(1000).collect();
        assert_eq!(a, b);
        let other: Vec<f64> = w.stream(1).take(1000).collect();
        assert_ne!(a, other);
    }

    #[test]
    fn random_access_matches_stream() {
        let w = WienerPath::new(7, 0.01).unwrap();
        let seq: Vec<f64> = w.stream(3).take(11).collect();
        for (k, v) in seq.iter().enumerate() {
            assert_eq!(w.increment(3, k as u64), *v);
        }
    }

    #[test]
    fn coarsening_sums_fine_increments() {
        let fine = WienerPath::new(9, 0.001).unwrap();
        let coarse = fine.coarsened(2);
        assert_eq!(coarse.dt(), 0.002);
        let f: Vec<f64> = fine.stream(0).take(200).collect();
        let c: Vec<f64> = coarse.stream(0).take(100).collect();
        for (j, v) in c.iter().enumerate() {
            assert!((v - (f[2 * j] + f[2 * j + 1])).abs() < 1e-15);
        }
        let six = coarse.coarsened(3).increment(0, 5);
        assert!((six - (30..36).map(|k| fine.increment(0, k)).sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn moments() {
        let dt = 0.04;
        let w = WienerPath::new(2024, dt).unwrap();
        let n = 200_000;
        let xs: Vec<f64> = w.stream(0).take(n).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 * (dt / n as f64).sqrt());
        assert!((var / dt - 1.0).abs() < 0.02);
    }
}
