//! ARMA(p, q), simulate-only.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::obs::ObservationSeq;
use crate::rng;

/// `Y_n = Σ phi_i Y_{n-i} + e_n + Σ theta_j e_{n-j}`, `e_n ~ N(0, sigma2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaSpec {
    pub phis: Vec<f64>,
    pub thetas: Vec<f64>,
    pub sigma2: f64,
}

/// Draws `n + 1` values after a burn-in from zero.
pub fn simulate_arma(
    spec: &ArmaSpec,
    n: usize,
    burn_in: usize,
    rng: &mut dyn RngCore,
) -> Result<ObservationSeq> {
    if !(spec.sigma2 > 0.0) || spec.phis.iter().chain(&spec.thetas).any(|v| !v.is_finite()) {
        return Err(Error::Inadmissible(format!("invalid ARMA spec {spec:?}")));
    }
    let (p, q) = (spec.phis.len(), spec.thetas.len());
    let mut ys = vec![0.0; p.max(1)];
    let mut es = vec![0.0; q.max(1)];
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..burn_in + n + 1 {
        let e = rng::normal(rng, 0.0, spec.sigma2);
        let y = spec.phis.iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>()
            + e
            + spec.thetas.iter().zip(&es).map(|(a, b)| a * b).sum::<f64>();
        ys.rotate_right(1);
        ys[0] = y;
        es.rotate_right(1);
        es[0] = e;
        if !y.is_finite() {
            return Err(Error::Inadmissible("ARMA recursion diverged".into()));
        }
        if k >= burn_in {
            out.push(y);
        }
    }
    ObservationSeq::from_flat(out, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_variance() {
        let spec = ArmaSpec {
            phis: vec![0.5],
            thetas: vec![0.4],
            sigma2: 1.0,
        };
        let mut r = rng::seeded(3);
        let y = simulate_arma(&spec, 200_000, 100, &mut r)
            .unwrap()
            .first_column();
        // ARMA(1,1): var = (1 + 2 phi theta + theta^2) / (1 - phi^2)
        let want = (1.0 + 2.0 * 0.5 * 0.4 + 0.16) / 0.75;
        let v = crate::stats::std_dev(&y).powi(2);
        assert!((v / want - 1.0).abs() < 0.03, "{v} vs {want}");
    }
}
