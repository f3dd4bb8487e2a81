//! Shipped model families.

mod ararch;
mod arma;
mod finite;
mod garch;
mod lingauss;
mod msar;
mod sv;

pub use ararch::{ararch_closed_form_beta1, ArArch, ArArchSpec};
pub use arma::{simulate_arma, ArmaSpec};
pub use finite::{FiniteEmission, FiniteHmm};
pub use garch::{
    garch11_conditional_loglik, garch_state_space, simulate_garch, Garch11, GarchSpec,
};
pub use lingauss::{kalman_loglik, LinGauss, LinGaussSpec, NoiseKind};
pub use msar::{MsAr, MsArSpec, DEFAULT_SIGMA2_FLOOR};
pub use sv::{StochVol, SvSpec, LOG_CHI2_MEAN, LOG_CHI2_VAR};

use core::f64::consts::PI;

pub(crate) fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * PI * var).ln() - d * d / (2.0 * var)
}

/// Laplace log density with the given variance.
pub(crate) fn log_laplace_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let b = (var / 2.0).sqrt();
    -(2.0 * b).ln() - (x - mean).abs() / b
}
