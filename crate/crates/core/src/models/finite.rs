//! Generic finite-state hidden Markov model, mostly used as a test bed.

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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FiniteEmission {
    /// `f ≡ c`; observations are ignored.
    Constant(f64),
    /// Observations are symbol indices; `probs[k][s]` is `P(xi = s | X = k)`.
    Categorical(Vec<Vec<f64>>),
    /// `N(s; mu_k + phi * s_prev, sigma2 * scale_k)`, with `theta = (phi, sigma2)`.
    /// The initial emission drops the autoregressive term.
    Gaussian { means: Vec<f64>, scales: Vec<f64> },
}

/// Finite chain with a fixed transition matrix and initial law; only the
/// Gaussian emission carries free parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteHmm {
    /// `transition[i][j] = P(X_n = j | X_{n-1} = i)`.
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    pub emission: FiniteEmission,
}

fn check_probs(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0))
        || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12
    {
        return Err(Error::InvalidParams(format!(
            "{what} is not a probability vector: {p:?}"
        )));
    }
    Ok(())
}

impl FiniteHmm {
    pub fn new(
        transition: Vec<Vec<f64>>,
        initial: Vec<f64>,
        emission: FiniteEmission,
    ) -> Result<Self> {
        let k = initial.len();
        if k == 0 || transition.len() != k {
            return Err(Error::InvalidParams(
                "transition matrix and initial law disagree in size".into(),
            ));
        }
        check_probs(&initial, "initial law")?;
        for (i, row) in transition.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidParams(format!(
                    "transition row {i} has wrong length"
                )));
            }
            check_probs(row, "transition row")?;
        }
        match &emission {
            FiniteEmission::Constant(c) if !(c.is_finite() && *c > 0.0) => {
                return Err(Error::InvalidParams(
                    "constant emission must be positive".into(),
                ))
            }
            FiniteEmission::Categorical(t) if t.len() != k => {
                return Err(Error::InvalidParams(
                    "emission table needs one row per state".into(),
                ))
            }
            FiniteEmission::Categorical(t) => {
                for row in t {
                    check_probs(row, "emission row")?;
                }
            }
            FiniteEmission::Gaussian { means, scales } if means.len() != k || scales.len() != k => {
                return Err(Error::InvalidParams(
                    "gaussian emission needs one mean and scale per state".into(),
                ))
            }
            FiniteEmission::Gaussian { scales, .. } if scales.iter().any(|s| !(*s > 0.0)) => {
                return Err(Error::InvalidParams(
                    "emission scales must be positive".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            transition,
            initial,
            emission,
        })
    }

    /// Single-state chain with Gaussian emissions: i.i.d. `N(mean + phi s_prev, sigma2)`.
    pub fn iid_gaussian(mean: f64) -> Self {
        Self {
            transition: vec![vec![1.0]],
            initial: vec![1.0],
            emission: FiniteEmission::Gaussian {
                means: vec![mean],
                scales: vec![1.0],
            },
        }
    }

    pub fn states(&self) -> usize {
        self.initial.len()
    }

    /// Parameter vector for the Gaussian emission.
    pub fn params(&self, phi: f64, sigma2: f64) -> Result<ParamVector> {
        self.param_template().with_values(&[phi, sigma2])
    }
}

fn label(x: f64) -> usize {
    x.round() as usize
}

impl StateSpaceModel for FiniteHmm {
    fn family(&self) -> &'static str {
        "finite"
    }

    fn param_template(&self) -> ParamVector {
        match self.emission {
            FiniteEmission::Gaussian { .. } => ParamVector::from_parts(&[
                ("phi", 0.0, Bounds::symmetric_unit()),
                ("sigma2", 1.0, Bounds::positive()),
            ])
            .expect("template values are admissible"),
            _ => {
                ParamVector::new(Vec::new(), Vec::new(), Vec::new()).expect("empty vector is valid")
            }
        }
    }

    fn finite_states(&self) -> Option<usize> {
        Some(self.states())
    }

    fn transition_density(&self, _theta: &[f64], from: f64, to: f64) -> f64 {
        self.transition[label(from)][label(to)]
    }

    fn log_emission_density(
        &self,
        theta: &[f64],
        x: f64,
        s: &[f64],
        s_prev: Option<&[f64]>,
    ) -> f64 {
        let k = label(x);
        match &self.emission {
            FiniteEmission::Constant(c) => c.ln(),
            FiniteEmission::Categorical(t) => {
                let sym = s[0];
                if sym < 0.0 || sym.fract() != 0.0 || sym as usize >= t[k].len() {
                    return f64::NEG_INFINITY;
                }
                t[k][sym as usize].ln()
            }
            FiniteEmission::Gaussian { means, scales } => {
                let ar = s_prev.map_or(0.0, |p| theta[0] * p[0]);
                log_normal_pdf(s[0], means[k] + ar, theta[1] * scales[k])
            }
        }
    }

    fn initial_density(&self, _theta: &[f64], x: f64) -> f64 {
        self.initial[label(x)]
    }

    fn sample_initial(&self, theta: &[f64], rng: &mut dyn RngCore) -> (f64, Vec<f64>) {
        let k = rng::categorical(rng, &self.initial);
        (k as f64, self.sample_emission(theta, k, None, rng))
    }

    fn sample_step(
        &self,
        theta: &[f64],
        x: f64,
        s_prev: &[f64],
        rng: &mut dyn RngCore,
    ) -> (f64, Vec<f64>) {
        let k = rng::categorical(rng, &self.transition[label(x)]);
        (k as f64, self.sample_emission(theta, k, Some(s_prev), rng))
    }
}

impl FiniteHmm {
    fn sample_emission(
        &self,
        theta: &[f64],
        k: usize,
        s_prev: Option<&[f64]>,
        rng: &mut dyn RngCore,
    ) -> Vec<f64> {
        match &self.emission {
            FiniteEmission::Constant(_) => vec![0.0],
            FiniteEmission::Categorical(t) => vec![rng::categorical(rng, &t[k]) as f64],
            FiniteEmission::Gaussian { means, scales } => {
                let ar = s_prev.map_or(0.0, |p| theta[0] * p[0]);
                vec![rng::normal(rng, means[k] + ar, theta[1] * scales[k])]
            }
        }
    }
}
