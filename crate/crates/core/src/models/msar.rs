//! Two-regime Markov-switching AR(1).
//!
//! The emission depends on the current and the previous regime, so the chain
//! is carried on pairs `(X_n, X_{n-1})`: state label `2 * cur + prev`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::log_normal_pdf;
use crate::error::{Error, Result};
use crate::model::StateSpaceModel;
use crate::params::{Bounds, ParamVector};
use crate::rng;

pub const DEFAULT_SIGMA2_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsAr {
    /// Lower bound on the innovation variance.
    pub sigma2_floor: f64,
}

impl Default for MsAr {
    fn default() -> Self {
        Self {
            sigma2_floor: DEFAULT_SIGMA2_FLOOR,
        }
    }
}

/// `p11 = P(1 -> 1)`, `p21 = P(2 -> 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsArSpec {
    pub p11: f64,
    pub p21: f64,
    pub phi1: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma2: f64,
}

impl MsArSpec {
    pub fn params(&self) -> Result<ParamVector> {
        let pv = MsAr::default().param_template().with_values(&[
            self.p11,
            self.p21,
            self.phi1,
            self.mu1,
            self.mu2,
            self.sigma2,
        ])?;
        MsAr::default().check_admissible(pv.values())?;
        Ok(pv)
    }
}

/// Regime transition matrix `[[p11, 1 - p11], [p21, 1 - p21]]`.
fn regime_matrix(theta: &[f64]) -> [[f64; 2]; 2] {
    [[theta[0], 1.0 - theta[0]], [theta[1], 1.0 - theta[1]]]
}

fn regime_stationary(theta: &[f64]) -> [f64; 2] {
    let p1 = theta[1] / (1.0 - theta[0] + theta[1]);
    [p1, 1.0 - p1]
}

fn split(x: f64) -> (usize, usize) {
    let k = x.round() as usize;
    (k / 2, k % 2)
}

fn mean(theta: &[f64], regime: usize) -> f64 {
    theta[3 + regime]
}

impl StateSpaceModel for MsAr {
    fn family(&self) -> &'static str {
        "msar"
    }

    fn param_template(&self) -> ParamVector {
        ParamVector::from_parts(&[
            ("p11", 0.9, Bounds::unit_interval()),
            ("p21", 0.1, Bounds::unit_interval()),
            ("phi1", 0.0, Bounds::symmetric_unit()),
            ("mu1", -1.0, Bounds::REAL),
            ("mu2", 1.0, Bounds::REAL),
            ("sigma2", 1.0, Bounds::above(self.sigma2_floor)),
        ])
        .expect("template values are admissible")
    }

    fn check_admissible(&self, theta: &[f64]) -> Result<()> {
        if theta[3] == theta[4] {
            return Err(Error::Inadmissible(format!(
                "regime means coincide at {}",
                theta[3]
            )));
        }
        Ok(())
    }

    fn finite_states(&self) -> Option<usize> {
        Some(4)
    }

    fn transition_density(&self, theta: &[f64], from: f64, to: f64) -> f64 {
        let (cur, _) = split(from);
        let (next, prev) = split(to);
        if prev != cur {
            return 0.0;
        }
        regime_matrix(theta)[cur][next]
    }

    fn log_emission_density(
        &self,
        theta: &[f64],
        x: f64,
        s: &[f64],
        s_prev: Option<&[f64]>,
    ) -> f64 {
        let (cur, prev) = split(x);
        match s_prev {
            Some(sp) => {
                let m = mean(theta, cur) + theta[2] * (sp[0] - mean(theta, prev));
                log_normal_pdf(s[0], m, theta[5])
            }
            None => log_normal_pdf(
                s[0],
                mean(theta, cur),
                theta[5] / (1.0 - theta[2] * theta[2]),
            ),
        }
    }

    /// `pi(cur, prev) = pi_prev * P(prev -> cur)`.
    fn initial_density(&self, theta: &[f64], x: f64) -> f64 {
        let (cur, prev) = split(x);
        regime_stationary(theta)[prev] * regime_matrix(theta)[prev][cur]
    }

    fn sample_initial(&self, theta: &[f64], rng: &mut dyn RngCore) -> (f64, Vec<f64>) {
        let prev = rng::categorical(rng, &regime_stationary(theta));
        let cur = rng::categorical(rng, &regime_matrix(theta)[prev]);
        let s = rng::normal(
            rng,
            mean(theta, cur),
            theta[5] / (1.0 - theta[2] * theta[2]),
        );
        ((2 * cur + prev) as f64, vec![s])
    }

    fn sample_step(
        &self,
        theta: &[f64],
        x: f64,
        s_prev: &[f64],
        rng: &mut dyn RngCore,
    ) -> (f64, Vec<f64>) {
        let (cur, _) = split(x);
        let next = rng::categorical(rng, &regime_matrix(theta)[cur]);
        let m = mean(theta, next) + theta[2] * (s_prev[0] - mean(theta, cur));
        ((2 * next + cur) as f64, vec![rng::normal(rng, m, theta[5])])
    }
}

impl MsAr {
    /// Current regime (0 or 1) of an augmented state label.
    pub fn regime(x: f64) -> usize {
        split(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StateGrid;
    use crate::model::simulate;
    use crate::operator::log_likelihood;

    fn spec() -> MsArSpec {
        MsArSpec {
            p11: 0.85,
            p21: 0.3,
            phi1: 0.0,
            mu1: -1.0,
            mu2: 1.5,
            sigma2: 0.8,
        }
    }

    #[test]
    fn equal_means_rejected() {
        let s = MsArSpec {
            mu2: -1.0,
            ..spec()
        };
        assert!(s.params().is_err());
        let s = MsArSpec {
            sigma2: 1e-5,
            ..spec()
        };
        assert!(s.params().is_err());
    }

    #[test]
    fn stationary_law_sums_to_one_and_is_invariant() {
        let th = spec().params().unwrap();
        let m = MsAr::default();
        let t = th.values();
        let pi: Vec<f64> = (0..4).map(|k| m.initial_density(t, k as f64)).collect();
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for j in 0..4 {
            let next: f64 = (0..4)
                .map(|i| pi[i] * m.transition_density(t, i as f64, j as f64))
                .sum();
            assert!((next - pi[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_phi_matches_classical_forward_algorithm() {
        let s = spec();
        let th = s.params().unwrap();
        let model = MsAr::default();
        let mut r = rng::seeded(2);
        let obs = simulate(&model, &th, 60, &mut r).unwrap().observations;
        let grid = StateGrid::finite(4).unwrap();
        let ll = log_likelihood(&model, &th, &grid, &obs).unwrap().total;

        // Plain two-state forward algorithm with i.i.d. emissions given the regime.
        let p = [[s.p11, 1.0 - s.p11], [s.p21, 1.0 - s.p21]];
        let pi1 = s.p21 / (1.0 - s.p11 + s.p21);
        let mut alpha = [pi1, 1.0 - pi1];
        let mus = [s.mu1, s.mu2];
        let mut total = 0.0;
        for (k, y) in obs.first_column().iter().enumerate() {
            if k > 0 {
                alpha = [
                    alpha[0] * p[0][0] + alpha[1] * p[1][0],
                    alpha[0] * p[0][1] + alpha[1] * p[1][1],
                ];
            }
            for r in 0..2 {
                alpha[r] *= log_normal_pdf(*y, mus[r], s.sigma2).exp();
            }
            let c = alpha[0] + alpha[1];
            total += c.ln();
            alpha = [alpha[0] / c, alpha[1] / c];
        }
        assert!((ll - total).abs() < 1e-11, "{ll} vs {total}");
    }

    #[test]
    fn regime_occupancy_in_iid_limit() {
        let s = MsArSpec {
            p11: 0.3,
            p21: 0.3,
            ..spec()
        };
        let n = 40_000;
        let mut r = rng::seeded(4);
        let path = simulate(&MsAr::default(), &s.params().unwrap(), n, &mut r).unwrap();
        let frac = path
            .hidden
            .iter()
            .filter(|&&x| MsAr::regime(x) == 0)
            .count() as f64
            / (n + 1) as f64;
        assert!((frac - 0.3).abs() < 3.0 / (n as f64).sqrt(), "{frac}");
    }
}
