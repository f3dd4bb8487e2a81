//! GARCH volatility models.
//!
//! `Y_n = sigma_n eps_n`, `sigma_n^2 = delta + Σ alpha_i sigma_{n-i}^2 + Σ beta_j Y_{n-j}^2`.
//! Only GARCH(1,1) has a grid likelihood: the hidden state is `sigma_n^2`,
//! whose next value is a deterministic function of the current one and the
//! last observation. On the grid that point mass is split between the two
//! neighbouring grid points by linear interpolation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::log_normal_pdf;
use crate::error::{Error, Result};
use crate::grid::{make_trapezoid_grid, StateGrid, DEFAULT_GRID_POINTS};
use crate::model::{SimulatedPath, StateSpaceModel};
use crate::obs::ObservationSeq;
use crate::operator::TransitionKernel;
use crate::params::{Bounds, ParamVector};
use crate::rng;

/// Steps discarded before the first recorded observation.
const BURN_IN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchSpec {
    pub delta: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl GarchSpec {
    pub fn garch11(delta: f64, alpha1: f64, beta1: f64) -> Self {
        Self {
            delta,
            alphas: vec![alpha1],
            betas: vec![beta1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::Inadmissible(format!(
                "delta = {} must be positive",
                self.delta
            )));
        }
        if self
            .alphas
            .iter()
            .chain(&self.betas)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::Inadmissible(
                "GARCH coefficients must be nonnegative".into(),
            ));
        }
        let persistence = self.persistence();
        if persistence >= 1.0 {
            return Err(Error::Inadmissible(format!(
                "Σ alpha + Σ beta = {persistence} is not below 1"
            )));
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.alphas.iter().chain(&self.betas).sum()
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.delta / (1.0 - self.persistence())
    }

    /// `(delta, alpha1, beta1)` for a GARCH(1,1) spec.
    pub fn params(&self) -> Result<ParamVector> {
        let m = garch_state_space(self)?;
        m.param_template()
            .with_values(&[self.delta, self.alphas[0], self.betas[0]])
    }
}

/// GARCH(1,1) on a grid over `sigma^2 ∈ [delta, hi]`; the conditioning
/// value `sigma_0^2` is the unconditional variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Garch11 {
    pub grid_points: usize,
}

impl Default for Garch11 {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

/// The grid model for a GARCH(1,1) spec; higher orders are simulate-only.
pub fn garch_state_space(spec: &GarchSpec) -> Result<Garch11> {
    if spec.alphas.len() != 1 || spec.betas.len() != 1 {
        return Err(Error::Unsupported(format!(
            "GARCH({},{}) is simulate-only; the grid likelihood needs p = q = 1",
            spec.alphas.len(),
            spec.betas.len()
        )));
    }
    spec.validate()?;
    Ok(Garch11::default())
}

fn sigma0(theta: &[f64]) -> f64 {
    theta[0] / (1.0 - theta[1] - theta[2])
}

/// Linear interpolation weights of `t` on an equally spaced grid, clamped to the ends.
fn hat(grid: &StateGrid, t: f64) -> [(usize, f64); 2] {
    let n = grid.len();
    let lo = grid.lo();
    let step = grid.spacing().unwrap_or(1.0);
    let u = (t - lo) / step;
    if !(u > 0.0) {
        return [(0, 1.0), (0, 0.0)];
    }
    let i = u.floor() as usize;
    if i + 1 >= n {
        return [(n - 1, 1.0), (n - 1, 0.0)];
    }
    let frac = u - i as f64;
    [(i, 1.0 - frac), (i + 1, frac)]
}

impl StateSpaceModel for Garch11 {
    fn family(&self) -> &'static str {
        "garch11"
    }

    fn param_template(&self) -> ParamVector {
        ParamVector::from_parts(&[
            ("delta", 0.1, Bounds::positive()),
            ("alpha1", 0.5, Bounds::unit_interval()),
            ("beta1", 0.2, Bounds::unit_interval()),
        ])
        .expect("template values are admissible")
    }

    fn check_admissible(&self, theta: &[f64]) -> Result<()> {
        if theta[1] + theta[2] >= 1.0 {
            return Err(Error::Inadmissible(format!(
                "alpha1 + beta1 = {} is not below 1",
                theta[1] + theta[2]
            )));
        }
        Ok(())
    }

    /// The transition is a point mass and has no density; the grid kernel
    /// comes from [`StateSpaceModel::transition_kernel`].
    fn transition_density(&self, _theta: &[f64], _from: f64, _to: f64) -> f64 {
        0.0
    }

    fn log_emission_density(
        &self,
        _theta: &[f64],
        x: f64,
        s: &[f64],
        _s_prev: Option<&[f64]>,
    ) -> f64 {
        log_normal_pdf(s[0], 0.0, x)
    }

    fn initial_density(&self, _theta: &[f64], _x: f64) -> f64 {
        0.0
    }

    fn initial_values(&self, theta: &[f64], grid: &StateGrid) -> Vec<f64> {
        let mut v = vec![0.0; grid.len()];
        for (i, lam) in hat(grid, sigma0(theta)) {
            v[i] += lam / grid.weights()[i];
        }
        v
    }

    fn sample_initial(&self, theta: &[f64], rng: &mut dyn RngCore) -> (f64, Vec<f64>) {
        let mut s2 = sigma0(theta);
        let mut y = rng::normal(rng, 0.0, s2);
        for _ in 0..BURN_IN {
            let (ns2, ny) = self.sample_step(theta, s2, &[y], rng);
            s2 = ns2;
            y = ny[0];
        }
        (s2, vec![y])
    }

    fn sample_step(
        &self,
        theta: &[f64],
        x: f64,
        s_prev: &[f64],
        rng: &mut dyn RngCore,
    ) -> (f64, Vec<f64>) {
        let s2 = theta[0] + theta[1] * x + theta[2] * s_prev[0] * s_prev[0];
        (s2, vec![rng::normal(rng, 0.0, s2)])
    }

    fn default_grid(&self, theta: &[f64]) -> Result<StateGrid> {
        make_trapezoid_grid(theta[0], theta[0] + 40.0 * sigma0(theta), self.grid_points)
    }

    /// Upper end chosen so no deterministic update from inside the grid
    /// leaves it: `hi ≥ (delta + beta1 max s^2) / (1 - alpha1)`.
    fn grid_for_data(&self, theta: &[f64], obs: &ObservationSeq) -> Result<StateGrid> {
        let max_s2 = obs.rows().map(|r| r[0] * r[0]).fold(0.0, f64::max);
        let reach = (theta[0] + theta[2] * max_s2) / (1.0 - theta[1]);
        let hi = 1.05 * reach.max(sigma0(theta));
        make_trapezoid_grid(theta[0], hi.max(theta[0] * (1.0 + 1e-6)), self.grid_points)
    }

    fn observation_driven(&self) -> bool {
        true
    }

    fn transition_kernel(
        &self,
        theta: &[f64],
        grid: &StateGrid,
        s_prev: Option<&[f64]>,
    ) -> Result<TransitionKernel> {
        let sp = s_prev.ok_or_else(|| {
            Error::Unsupported("GARCH transition needs the previous observation".into())
        })?;
        if grid.spacing().is_none() {
            return Err(Error::InvalidGrid(
                "GARCH needs an equally spaced grid".into(),
            ));
        }
        let w = grid.weights();
        let mut entries = Vec::with_capacity(2 * grid.len());
        for (j, &x) in grid.points().iter().enumerate() {
            let t = theta[0] + theta[1] * x + theta[2] * sp[0] * sp[0];
            for (i, lam) in hat(grid, t) {
                if lam > 0.0 {
                    entries.push((i, j, w[j] * lam / w[i]));
                }
            }
        }
        Ok(TransitionKernel::Sparse {
            n: grid.len(),
            entries,
        })
    }
}

/// Gaussian log likelihood of `y_0..y_n` given `sigma_0^2 = delta / (1 - alpha1 - beta1)`,
/// with `sigma_{k+1}^2 = delta + alpha1 sigma_k^2 + beta1 y_k^2`.
pub fn garch11_conditional_loglik(spec: &GarchSpec, obs: &ObservationSeq) -> Result<f64> {
    garch_state_space(spec)?;
    let (d, a, b) = (spec.delta, spec.alphas[0], spec.betas[0]);
    let mut s2 = spec.unconditional_variance();
    let mut ll = 0.0;
    for row in obs.rows() {
        let y = row[0];
        ll += log_normal_pdf(y, 0.0, s2);
        s2 = d + a * s2 + b * y * y;
    }
    Ok(ll)
}

/// Simulates GARCH(p, q) from the unconditional variance after a burn-in;
/// the hidden path is `sigma_n^2`.
pub fn simulate_garch(spec: &GarchSpec, n: usize, rng: &mut dyn RngCore) -> Result<SimulatedPath> {
    spec.validate()?;
    if n < 1 {
        return Err(Error::InvalidExperiment(
            "simulation length must be at least 1".into(),
        ));
    }
    let (p, q) = (spec.alphas.len(), spec.betas.len());
    let v = spec.unconditional_variance();
    // Most recent first.
    let mut s2_lags = vec![v; p.max(1)];
    let mut y2_lags = vec![v; q.max(1)];
    let mut hidden = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    for k in 0..BURN_IN + n + 1 {
        let s2 = spec.delta
            + spec
                .alphas
                .iter()
                .zip(&s2_lags)
                .map(|(a, s)| a * s)
                .sum::<f64>()
            + spec
                .betas
                .iter()
                .zip(&y2_lags)
                .map(|(b, y)| b * y)
                .sum::<f64>();
        let y = rng::normal(rng, 0.0, s2);
        s2_lags.rotate_right(1);
        s2_lags[0] = s2;
        y2_lags.rotate_right(1);
        y2_lags[0] = y * y;
        if k >= BURN_IN {
            hidden.push(s2);
            ys.push(y);
        }
    }
    Ok(SimulatedPath {
        hidden,
        observations: ObservationSeq::from_flat(ys, 1)?,
    })
}
