//! AR(1) with ARCH(1) errors, observed directly.
//!
//! `X_n = beta0 + beta1 X_{n-1} + sqrt(alpha0 + alpha1 X_{n-1}^2) eps_n` and
//! `xi_n = X_n`. The hidden chain is a single dummy state; all dynamics live
//! in the emission, which depends on the previous observation. Paths start at
//! `x_0 = 0` and the likelihood conditions on it (initial emission ≡ 1).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::log_normal_pdf;
use crate::error::{Error, Result};
use crate::model::StateSpaceModel;
use crate::obs::ObservationSeq;
use crate::params::{Bounds, ParamVector};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArArch;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArArchSpec {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub beta1: f64,
}

impl ArArchSpec {
    pub fn params(&self) -> Result<ParamVector> {
        let pv = ArArch.param_template().with_values(&[
            self.alpha0,
            self.alpha1,
            self.beta0,
            self.beta1,
        ])?;
        ArArch.check_admissible(pv.values())?;
        Ok(pv)
    }
}

fn draw(theta: &[f64], prev: f64, rng: &mut dyn RngCore) -> f64 {
    rng::normal(
        rng,
        theta[2] + theta[3] * prev,
        theta[0] + theta[1] * prev * prev,
    )
}

impl StateSpaceModel for ArArch {
    fn family(&self) -> &'static str {
        "ararch"
    }

    fn param_template(&self) -> ParamVector {
        ParamVector::from_parts(&[
            ("alpha0", 1.0, Bounds::positive()),
            ("alpha1", 0.3, Bounds::unit_interval()),
            ("beta0", 0.0, Bounds::REAL),
            ("beta1", 0.5, Bounds::unit_interval()),
        ])
        .expect("template values are admissible")
    }

    fn check_admissible(&self, theta: &[f64]) -> Result<()> {
        if 3.0 * theta[1] * theta[1] >= 1.0 {
            return Err(Error::Inadmissible(format!(
                "3 alpha1^2 = {} is not below 1",
                3.0 * theta[1] * theta[1]
            )));
        }
        Ok(())
    }

    fn finite_states(&self) -> Option<usize> {
        Some(1)
    }

    fn transition_density(&self, _theta: &[f64], _from: f64, _to: f64) -> f64 {
        1.0
    }

    fn log_emission_density(
        &self,
        theta: &[f64],
        _x: f64,
        s: &[f64],
        s_prev: Option<&[f64]>,
    ) -> f64 {
        match s_prev {
            Some(p) => log_normal_pdf(
                s[0],
                theta[2] + theta[3] * p[0],
                theta[0] + theta[1] * p[0] * p[0],
            ),
            None => 0.0,
        }
    }

    fn initial_density(&self, _theta: &[f64], _x: f64) -> f64 {
        1.0
    }

    fn sample_initial(&self, _theta: &[f64], _rng: &mut dyn RngCore) -> (f64, Vec<f64>) {
        (0.0, vec![0.0])
    }

    fn sample_step(
        &self,
        theta: &[f64],
        _x: f64,
        s_prev: &[f64],
        rng: &mut dyn RngCore,
    ) -> (f64, Vec<f64>) {
        (0.0, vec![draw(theta, s_prev[0], rng)])
    }
}

/// Weighted least squares value of `beta1` with the other parameters known:
/// `Σ (x_k - beta0) x_{k-1} / v_k  /  Σ x_{k-1}^2 / v_k`, `v_k = alpha0 + alpha1 x_{k-1}^2`.
pub fn ararch_closed_form_beta1(spec: &ArArchSpec, obs: &ObservationSeq) -> Result<f64> {
    let x = obs.first_column();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 1..x.len() {
        let v = spec.alpha0 + spec.alpha1 * x[k - 1] * x[k - 1];
        num += (x[k] - spec.beta0) * x[k - 1] / v;
        den += x[k - 1] * x[k - 1] / v;
    }
    if den == 0.0 {
        return Err(Error::InvalidObservations(
            "every lagged value is zero; beta1 is not identified".into(),
        ));
    }
    Ok(num / den)
}
