//! Seeding and the few draws the models need.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Independent stream `rep` derived from `seed`; replications stay
/// reproducible no matter how they are scheduled.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn std_normal(rng: &mut dyn RngCore) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal(rng: &mut dyn RngCore, mean: f64, var: f64) -> f64 {
    mean + var.sqrt() * std_normal(rng)
}

pub fn std_exp(rng: &mut dyn RngCore) -> f64 {
    Exp1.sample(rng)
}

/// Uniform on `[0, 1)`.
pub fn uniform(rng: &mut dyn RngCore) -> f64 {
    use rand::Rng;
    rng.random::<f64>()
}

/// Laplace draw with the given variance (scale `sqrt(var / 2)`).
pub fn laplace(rng: &mut dyn RngCore, var: f64) -> f64 {
    let b = (var / 2.0).sqrt();
    let e = std_exp(rng);
    if uniform(rng) < 0.5 {
        -b * e
    } else {
        b * e
    }
}

/// Index drawn from the probability vector `p`.
pub fn categorical(rng: &mut dyn RngCore, p: &[f64]) -> usize {
    let u = uniform(rng);
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_and_repeat() {
        let a = replication_rng(7, 0).next_u64();
        let b = replication_rng(7, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, replication_rng(7, 0).next_u64());
    }

    #[test]
    fn laplace_variance() {
        let mut rng = seeded(3);
        let n = 200_000;
        let v: f64 = (0..n).map(|_| laplace(&mut rng, 2.0).powi(2)).sum::<f64>() / n as f64;
        assert!((v - 2.0).abs() < 0.05, "{v}");
    }
}
