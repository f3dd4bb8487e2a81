//! Log-normal stochastic volatility.
//!
//! `Y_n = exp((omega + X_n) / 2) eps_n`, `X_n = alpha X_{n-1} + eta_n`. The
//! observation is `xi_n = log Y_n^2 = omega + X_n + zeta_n` with
//! `zeta_n = log eps_n^2` following the log chi-square(1) law.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::log_normal_pdf;
use crate::error::Result;
use crate::model::StateSpaceModel;
use crate::params::{Bounds, ParamVector};
use crate::rng;

/// `E log chi2(1) = -(gamma + log 2)`.
pub const LOG_CHI2_MEAN: f64 = -1.270_362_845_461_478;
/// `Var log chi2(1) = pi^2 / 2`.
pub const LOG_CHI2_VAR: f64 = PI * PI / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StochVol {
    /// Replace the log chi-square emission by its moment-matched Gaussian.
    #[serde(default)]
    pub qml: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvSpec {
    pub alpha: f64,
    pub sigma_eta2: f64,
    pub omega: f64,
    #[serde(default)]
    pub qml: bool,
}

impl SvSpec {
    pub fn model(&self) -> StochVol {
        StochVol { qml: self.qml }
    }

    pub fn params(&self) -> Result<ParamVector> {
        StochVol::default()
            .param_template()
            .with_values(&[self.alpha, self.sigma_eta2, self.omega])
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma_eta2 / (1.0 - self.alpha * self.alpha)
    }
}

/// Density of `log eps^2` for standard normal `eps`.
pub(crate) fn log_chi2_log_pdf(z: f64) -> f64 {
    -0.5 * (2.0 * PI).ln() + 0.5 * z - 0.5 * z.exp()
}

impl StateSpaceModel for StochVol {
    fn family(&self) -> &'static str {
        "sv"
    }

    fn param_template(&self) -> ParamVector {
        ParamVector::from_parts(&[
            ("alpha", 0.9, Bounds::symmetric_unit()),
            ("sigma_eta2", 0.1, Bounds::positive()),
            ("omega", 0.0, Bounds::REAL),
        ])
        .expect("template values are admissible")
    }

    fn transition_density(&self, theta: &[f64], from: f64, to: f64) -> f64 {
        log_normal_pdf(to, theta[0] * from, theta[1]).exp()
    }

    fn log_emission_density(
        &self,
        theta: &[f64],
        x: f64,
        s: &[f64],
        _s_prev: Option<&[f64]>,
    ) -> f64 {
        let z = s[0] - theta[2] - x;
        if self.qml {
            log_normal_pdf(z, LOG_CHI2_MEAN, LOG_CHI2_VAR)
        } else {
            log_chi2_log_pdf(z)
        }
    }

    fn initial_density(&self, theta: &[f64], x: f64) -> f64 {
        log_normal_pdf(x, 0.0, theta[1] / (1.0 - theta[0] * theta[0])).exp()
    }

    fn sample_initial(&self, theta: &[f64], rng: &mut dyn RngCore) -> (f64, Vec<f64>) {
        let x = rng::normal(rng, 0.0, theta[1] / (1.0 - theta[0] * theta[0]));
        (x, vec![self.emit(theta, x, rng)])
    }

    fn sample_step(
        &self,
        theta: &[f64],
        x: f64,
        _s_prev: &[f64],
        rng: &mut dyn RngCore,
    ) -> (f64, Vec<f64>) {
        let nx = rng::normal(rng, theta[0] * x, theta[1]);
        (nx, vec![self.emit(theta, nx, rng)])
    }

    fn stationary_moments(&self, theta: &[f64]) -> Option<(f64, f64)> {
        Some((0.0, (theta[1] / (1.0 - theta[0] * theta[0])).sqrt()))
    }
}

impl StochVol {
    fn emit(&self, theta: &[f64], x: f64, rng: &mut dyn RngCore) -> f64 {
        let e = rng::std_normal(rng);
        theta[2] + x + (e * e).ln()
    }
}
