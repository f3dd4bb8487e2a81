//! Summary statistics for Monte Carlo output.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation with the `n - 1` divisor.
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

fn central_moment(x: &[f64], k: i32) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(k)).sum::<f64>() / x.len() as f64
}

pub fn skewness(x: &[f64]) -> f64 {
    central_moment(x, 3) / central_moment(x, 2).powf(1.5)
}

/// Raw (not excess) kurtosis; 3 for a normal sample.
pub fn kurtosis(x: &[f64]) -> f64 {
    central_moment(x, 4) / central_moment(x, 2).powi(2)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / core::f64::consts::SQRT_2))
}

/// Kolmogorov-Smirnov distance between the empirical law of `x` and
/// `N(mean, sd^2)`.
pub fn ks_normal(x: &[f64], mean: f64, sd: f64) -> f64 {
    let mut s: Vec<f64> = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (i, &v)| {
        let f = normal_cdf((v - mean) / sd);
        d.max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs())
    })
}

/// Moments of a sample of standardized values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub ks: f64,
}

impl Summary {
    /// Summary of `x`, with the KS distance against the standard normal.
    pub fn of(x: &[f64]) -> Self {
        Self {
            n: x.len(),
            mean: mean(x),
            sd: std_dev(x),
            skewness: skewness(x),
            kurtosis: kurtosis(x),
            ks: ks_normal(x, 0.0, 1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn moments_of_small_sample() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&x), 2.5);
        assert!((std_dev(&x) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(skewness(&x).abs() < 1e-15);
        assert!((kurtosis(&x) - 1.64).abs() < 1e-12);
    }

    #[test]
    fn cdf_and_ks() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.96) - 0.9750021048517795).abs() < 1e-12);
        assert!((ks_normal(&[0.0], 0.0, 1.0) - 0.5).abs() < 1e-15);
    }
}
