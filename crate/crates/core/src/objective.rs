//! Cooperative-bargaining fitness of a metric-cell distribution.
//!
//! `f(p) = -(1/M) sum_i log2(1 + (M - 1) p_i)`. Every cell bargains for
//! probability mass; the value is lowest when mass is spread evenly and
//! highest when it all sits in one cell.

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-6;

/// Fitness value; lower is more even.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Fitness(pub f64);

impl Fitness {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `(f_min, f_max) = (-log2(2 - 1/M), -log2(M) / M)`.
pub fn fitness_bounds(m: usize) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(Error::InvalidConfig(format!("metric grid needs at least 2 cells, got {m}")));
    }
    let mf = m as f64;
    Ok((-(2.0 - 1.0 / mf).log2(), -mf.log2() / mf))
}

/// Bargaining fitness of a probability vector over `M = p.len()` cells.
///
/// Entries must be non-negative and sum to 1 within `1e-6`; the vector is
/// renormalized exactly before evaluation.
pub fn bargaining_fitness(p: &[f64]) -> Result<Fitness> {
    let m = p.len();
    if m < 2 {
        return Err(Error::InvalidDistribution(format!("need at least 2 cells, got {m}")));
    }
    if let Some(x) = p.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidDistribution(format!("entry {x} is not a probability")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
    }
    let scale = (m - 1) as f64 / total;
    let sum: f64 = p.iter().map(|&x| (scale * x).ln_1p()).sum();
    Ok(Fitness(-sum / (m as f64 * std::f64::consts::LN_2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_attains_minimum() {
        let p = vec![0.01; 100];
        let f = bargaining_fitness(&p).unwrap().value();
        assert!((f - -(1.99f64).log2()).abs() < 1e-12);
        assert!((f + 0.99277).abs() < 1e-5);
    }

    #[test]
    fn one_hot_attains_maximum() {
        let mut p = vec![0.0; 100];
        p[37] = 1.0;
        let f = bargaining_fitness(&p).unwrap().value();
        assert!((f - -(100f64).log2() / 100.0).abs() < 1e-15);
        assert!((f + 0.06644).abs() < 1e-5);
    }

    #[test]
    fn two_cells() {
        let f = bargaining_fitness(&[0.5, 0.5]).unwrap().value();
        assert!((f - -(1.5f64).log2()).abs() < 1e-15);
        assert!((f + 0.58496).abs() < 1e-5);
    }

    #[test]
    fn bounds_formulas() {
        let (lo, hi) = fitness_bounds(100).unwrap();
        assert!((lo + 0.99277).abs() < 1e-5 && (hi + 0.06644).abs() < 1e-5);
        let (lo, hi) = fitness_bounds(2).unwrap();
        assert!((lo - -(1.5f64).log2()).abs() < 1e-15);
        assert_eq!(hi, -0.5);
        assert!(fitness_bounds(1).is_err());
    }

    #[test]
    fn bounds_trend_with_grid_size() {
        let b: Vec<(f64, f64)> = [10, 100, 1000].iter().map(|&m| fitness_bounds(m).unwrap()).collect();
        assert!(b[0].0 > b[1].0 && b[1].0 > b[2].0 && b[2].0 > -1.0);
        assert!(b[0].1 < b[1].1 && b[1].1 < b[2].1 && b[2].1 < 0.0);
    }

    #[test]
    fn rejects_invalid_distributions() {
        assert!(bargaining_fitness(&[0.6, 0.6]).is_err());
        assert!(bargaining_fitness(&[1.5, -0.5]).is_err());
        assert!(bargaining_fitness(&[f64::NAN, 1.0]).is_err());
        assert!(bargaining_fitness(&[1.0]).is_err());
        // within tolerance is accepted and renormalized
        let f = bargaining_fitness(&[0.5 + 4e-7, 0.5]).unwrap().value();
        assert!((f - -(1.5f64).log2()).abs() < 1e-6);
    }

    #[test]
    fn perturbing_uniform_increases_fitness() {
        let m = 100;
        let f0 = bargaining_fitness(&vec![1.0 / m as f64; m]).unwrap().value();
        for i in 0..m {
            let mut p = vec![1.0 / m as f64; m];
            let j = (i + 1) % m;
            p[i] += 0.001;
            p[j] -= 0.001;
            assert!(bargaining_fitness(&p).unwrap().value() > f0);
        }
    }
}
