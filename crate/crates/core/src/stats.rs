//! Empirical distributions, KS distance, modulus of continuity, rate fits.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Empirical CDF, optionally with censored observations stacked as an atom
/// at the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    censored: usize,
    horizon: f64,
}

impl EmpiricalCdf {
    pub fn new(samples: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::with_censored(samples, 0, f64::INFINITY)
    }

    pub fn with_censored(samples: impl IntoIterator<Item = f64>, censored: usize, horizon: f64) -> Result<Self> {
        let mut sorted: Vec<f64> = samples.into_iter().collect();
        if sorted.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidArgument("NaN sample".into()));
        }
        if censored > 0 && !horizon.is_finite() {
            return Err(Error::InvalidArgument("censored samples need a finite horizon".into()));
        }
        if sorted.is_empty() && censored == 0 {
            return Err(Error::Empty);
        }
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted, censored, horizon })
    }

    /// From exit times, `None` meaning still inside at the horizon.
    pub fn from_exit_times(times: impl IntoIterator<Item = Option<f64>>, horizon: f64) -> Result<Self> {
        let mut censored = 0;
        let hits: Vec<f64> = times
            .into_iter()
            .filter_map(|t| {
                if t.is_none() {
                    censored += 1;
                }
                t
            })
            .collect();
        Self::with_censored(hits, censored, horizon)
    }

    pub fn len(&self) -> usize {
        self.sorted.len() + self.censored
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn censored_count(&self) -> usize {
        self.censored
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut count = self.sorted.partition_point(|s| *s <= x);
        if x >= self.horizon {
            count += self.censored;
        }
        count as f64 / self.len() as f64
    }

    /// Jump locations with the value after each jump, for `x, F(x)` output.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut xs = self.sorted.clone();
        if self.censored > 0 {
            xs.push(self.horizon);
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.into_iter().map(|x| (x, self.eval(x))).collect()
    }

    fn support(&self) -> impl Iterator<Item = f64> + '_ {
        self.sorted.iter().copied().chain((self.censored > 0).then_some(self.horizon))
    }
}

/// `sup_x |F_a(x) − F_b(x)|`, attained on the pooled jump points.
pub fn ks_distance(a: &EmpiricalCdf, b: &EmpiricalCdf) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty);
    }
    Ok(a.support().chain(b.support()).map(|x| (a.eval(x) - b.eval(x)).abs()).fold(0.0, f64::max))
}

/// `sup_{|u−v|≤a, u,v∈[0,b]} |f(u) − f(v)|` for `f` sampled every `dt` from 0.
pub fn modulus_of_continuity(samples: &[f64], dt: f64, a: f64, b: f64) -> f64 {
    let end = ((b / dt + 1e-9).floor() as usize + 1).min(samples.len());
    let w = (a / dt + 1e-9).floor() as usize;
    let f = &samples[..end];
    if f.len() < 2 || w == 0 {
        return 0.0;
    }
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0_f64;
    for (i, &v) in f.iter().enumerate() {
        while maxq.back().is_some_and(|&j| f[j] <= v) {
            maxq.pop_back();
        }
        maxq.push_back(i);
        while minq.back().is_some_and(|&j| f[j] >= v) {
            minq.pop_back();
        }
        minq.push_back(i);
        let lo = i.saturating_sub(w);
        while maxq.front().is_some_and(|&j| j < lo) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&j| j < lo) {
            minq.pop_front();
        }
        best = best.max(f[maxq[0]] - f[minq[0]]);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of `ln error` on `ln ε`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(bad) = points.iter().flat_map(|(x, y)| [*x, *y]).find(|v| !(*v > 0.0)) {
        return Err(Error::NonPositive(bad));
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all ε values coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit { slope, intercept: my - slope * mx, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_trivial_cases() {
        let a = EmpiricalCdf::new([0.0]).unwrap();
        let b = EmpiricalCdf::new([1.0]).unwrap();
        assert_eq!(ks_distance(&a, &b).unwrap(), 1.0);
        let c = EmpiricalCdf::new([0.3, 0.1, 0.2]).unwrap();
        assert_eq!(ks_distance(&c, &c).unwrap(), 0.0);
        assert_eq!(EmpiricalCdf::new(Vec::<f64>::new()).unwrap_err(), Error::Empty);
    }

    #[test]
    fn censored_atom_at_horizon() {
        let cdf = EmpiricalCdf::from_exit_times([Some(0.5), None, Some(1.0), None], 2.0).unwrap();
        assert_eq!(cdf.eval(1.0), 0.5);
        assert_eq!(cdf.eval(1.999), 0.5);
        assert_eq!(cdf.eval(2.0), 1.0);
        assert_eq!(cdf.steps().last(), Some(&(2.0, 1.0)));
        let all_hit = EmpiricalCdf::new([0.5, 1.0, 1.5, 1.9]).unwrap();
        assert_eq!(ks_distance(&cdf, &all_hit).unwrap(), 0.5);
    }

    #[test]
    fn modulus_examples() {
        let dt = 0.01;
        let line: Vec<f64> = (0..=100).map(|i| 3.0 * i as f64 * dt).collect();
        assert!((modulus_of_continuity(&line, dt, 0.25, 1.0) - 0.75).abs() < 1e-12);
        assert_eq!(modulus_of_continuity(&[2.0; 50], dt, 0.1, 0.49), 0.0);
        // Only samples on [0, b] count.
        assert!((modulus_of_continuity(&line, dt, 0.1, 0.5) - 0.3).abs() < 1e-12);
        let zig = [0.0, 1.0, -1.0, 0.5, 0.0];
        assert_eq!(modulus_of_continuity(&zig, 1.0, 1.0, 4.0), 2.0);
        assert_eq!(modulus_of_continuity(&zig, 1.0, 2.0, 4.0), 2.0);
    }

    #[test]
    fn slopes() {
        let quad: Vec<(f64, f64)> = [0.2, 0.1, 0.05].iter().map(|e| (*e, 7.0 * e * e)).collect();
        let fit = loglog_slope(&quad).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-10 && (fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-10);
        let flat = loglog_slope(&[(0.2, 3.0), (0.1, 3.0), (0.05, 3.0)]).unwrap();
        assert!(flat.slope.abs() < 1e-12);
        assert_eq!(loglog_slope(&[(0.2, 1.0), (0.1, 0.0), (0.05, 1.0)]).unwrap_err(), Error::NonPositive(0.0));
        assert!(loglog_slope(&quad[..2]).is_err());
    }
}
