//! Linear AR(1) state observed with additive noise.

use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{log_laplace_pdf, log_normal_pdf};
use crate::error::{Error, Result};
use crate::model::StateSpaceModel;
use crate::obs::ObservationSeq;
use crate::params::{Bounds, ParamVector};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Laplace noise with the stated variance.
    DoubleExponential,
}

/// `X_n = alpha X_{n-1} + eta_n`, `xi_n = X_n + eps_n`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinGauss {
    #[serde(default)]
    pub noise: NoiseKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinGaussSpec {
    pub alpha: f64,
    pub sigma_eta2: f64,
    pub sigma_eps2: f64,
    #[serde(default)]
    pub noise: NoiseKind,
}

impl LinGaussSpec {
    pub fn new(alpha: f64, sigma_eta2: f64, sigma_eps2: f64) -> Self {
        Self {
            alpha,
            sigma_eta2,
            sigma_eps2,
            noise: NoiseKind::Gaussian,
        }
    }

    pub fn model(&self) -> LinGauss {
        LinGauss { noise: self.noise }
    }

    pub fn params(&self) -> Result<ParamVector> {
        LinGauss::default().param_template().with_values(&[
            self.alpha,
            self.sigma_eta2,
            self.sigma_eps2,
        ])
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma_eta2 / (1.0 - self.alpha * self.alpha)
    }
}

impl LinGauss {
    fn log_noise(&self, u: f64, var: f64) -> f64 {
        match self.noise {
            NoiseKind::Gaussian => log_normal_pdf(u, 0.0, var),
            NoiseKind::DoubleExponential => log_laplace_pdf(u, 0.0, var),
        }
    }

    fn draw_noise(&self, rng: &mut dyn RngCore, var: f64) -> f64 {
        match self.noise {
            NoiseKind::Gaussian => rng::normal(rng, 0.0, var),
            NoiseKind::DoubleExponential => rng::laplace(rng, var),
        }
    }
}

impl StateSpaceModel for LinGauss {
    fn family(&self) -> &'static str {
        "lingauss"
    }

    fn param_template(&self) -> ParamVector {
        ParamVector::from_parts(&[
            ("alpha", 0.5, Bounds::symmetric_unit()),
            ("sigma_eta2", 1.0, Bounds::positive()),
            ("sigma_eps2", 1.0, Bounds::positive()),
        ])
        .expect("template values are admissible")
    }

    fn transition_density(&self, theta: &[f64], from: f64, to: f64) -> f64 {
        self.log_noise(to - theta[0] * from, theta[1]).exp()
    }

    fn log_emission_density(
        &self,
        theta: &[f64],
        x: f64,
        s: &[f64],
        _s_prev: Option<&[f64]>,
    ) -> f64 {
        self.log_noise(s[0] - x, theta[2])
    }

    /// Exact for Gaussian noise; for Laplace noise the stationary law is not
    /// available in closed form and a Gaussian with the same variance is used.
    fn initial_density(&self, theta: &[f64], x: f64) -> f64 {
        log_normal_pdf(x, 0.0, theta[1] / (1.0 - theta[0] * theta[0])).exp()
    }

    fn sample_initial(&self, theta: &[f64], rng: &mut dyn RngCore) -> (f64, Vec<f64>) {
        let x = match self.noise {
            NoiseKind::Gaussian => rng::normal(rng, 0.0, theta[1] / (1.0 - theta[0] * theta[0])),
            NoiseKind::DoubleExponential => {
                // Run the chain forward from zero until the start is forgotten.
                let burn = (50.0 / -(theta[0].abs().max(1e-3)).ln()).ceil() as usize;
                let mut x = 0.0;
                for _ in 0..burn.max(50) {
                    x = theta[0] * x + self.draw_noise(rng, theta[1]);
                }
                x
            }
        };
        (x, vec![x + self.draw_noise(rng, theta[2])])
    }

    fn sample_step(
        &self,
        theta: &[f64],
        x: f64,
        _s_prev: &[f64],
        rng: &mut dyn RngCore,
    ) -> (f64, Vec<f64>) {
        let nx = theta[0] * x + self.draw_noise(rng, theta[1]);
        (nx, vec![nx + self.draw_noise(rng, theta[2])])
    }

    fn stationary_moments(&self, theta: &[f64]) -> Option<(f64, f64)> {
        Some((0.0, (theta[1] / (1.0 - theta[0] * theta[0])).sqrt()))
    }
}

/// Exact Gaussian log likelihood by the prediction error decomposition.
pub fn kalman_loglik(spec: &LinGaussSpec, obs: &ObservationSeq) -> Result<f64> {
    if obs.dim() != 1 {
        return Err(Error::InvalidObservations(
            "the Kalman filter here is scalar".into(),
        ));
    }
    spec.params()?;
    let (a, q, r) = (spec.alpha, spec.sigma_eta2, spec.sigma_eps2);
    let mut m = 0.0;
    let mut p = spec.stationary_variance();
    let mut ll = 0.0;
    for row in obs.rows() {
        let s = row[0];
        let f = p + r;
        ll += log_normal_pdf(s, m, f);
        let k = p / f;
        m += k * (s - m);
        p *= 1.0 - k;
        m *= a;
        p = a * a * p + q;
    }
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_trapezoid_grid;
    use crate::model::simulate;
    use crate::operator::{initial_filter, log_likelihood};

    #[test]
    fn kalman_decoupled_case_is_iid() {
        let spec = LinGaussSpec::new(0.0, 1.3, 0.7);
        let data = [0.3, -1.2, 2.0, 0.1];
        let obs = ObservationSeq::from_scalars(&data).unwrap();
        let iid: f64 = data.iter().map(|&s| log_normal_pdf(s, 0.0, 2.0)).sum();
        assert!((kalman_loglik(&spec, &obs).unwrap() - iid).abs() < 1e-14);
    }

    #[test]
    fn kalman_single_observation() {
        let spec = LinGaussSpec::new(0.8, 1.0, 0.5);
        let obs = ObservationSeq::from_scalars(&[1.7]).unwrap();
        let want = log_normal_pdf(1.7, 0.0, 1.0 / 0.36 + 0.5);
        assert!((kalman_loglik(&spec, &obs).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn grid_matches_kalman() {
        let spec = LinGaussSpec::new(0.8, 1.0, 1.0);
        let model = spec.model();
        let theta = spec.params().unwrap();
        let mut r = rng::seeded(11);
        let obs = simulate(&model, &theta, 199, &mut r).unwrap().observations;
        let grid = model.default_grid(theta.values()).unwrap();
        let ll = log_likelihood(&model, &theta, &grid, &obs).unwrap().total;
        let k = kalman_loglik(&spec, &obs).unwrap();
        assert!(((ll - k) / k).abs() < 1e-4, "{ll} vs {k}");
    }

    #[test]
    fn initial_filter_is_pointwise_product() {
        let spec = LinGaussSpec::new(0.5, 1.0, 1.0);
        let model = spec.model();
        let theta = spec.params().unwrap();
        let grid = make_trapezoid_grid(-8.0, 8.0, 161).unwrap();
        let h = initial_filter(&model, &theta, &grid, &[0.4]).unwrap();
        let raw: Vec<f64> = grid
            .points()
            .iter()
            .map(|&x| model.initial_density(theta.values(), x) * log_normal_pdf(0.4, x, 1.0).exp())
            .collect();
        let mass = grid.integrate_values(&raw);
        for (a, b) in h.values.iter().zip(&raw) {
            assert!((a - b / mass).abs() < 1e-13);
        }
        assert!((h.log_norm - mass.ln()).abs() < 1e-13);
    }

    #[test]
    fn stationary_variance_of_simulated_path() {
        let spec = LinGaussSpec::new(0.8, 1.0, 1.0);
        let mut r = rng::seeded(5);
        let path = simulate(&spec.model(), &spec.params().unwrap(), 100_000, &mut r).unwrap();
        let v = crate::stats::std_dev(&path.hidden).powi(2);
        assert!((v / spec.stationary_variance() - 1.0).abs() < 0.02, "{v}");
    }
}
