//! The state space model abstraction.
//!
//! A model supplies the transition density `p(x, y)` of the hidden chain with
//! respect to the grid measure, the emission density `f(s | x, s_prev)` of an
//! observation given the current hidden state and the previous observation,
//! and the stationary density of the hidden chain. Everything downstream
//! (filters, likelihoods, diagnostics, inference) only talks to this trait.

use alloc::format;
use alloc::vec::Vec;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::grid::{StateGrid, DEFAULT_GRID_POINTS, DEFAULT_SPAN_SDS};
use crate::obs::ObservationSeq;
use crate::operator::TransitionKernel;
use crate::params::ParamVector;

pub trait StateSpaceModel: Sync {
    /// Short family tag, e.g. `"lingauss"`.
    fn family(&self) -> &'static str;

    /// Names, bounds and default values of the parameters.
    fn param_template(&self) -> ParamVector;

    fn obs_dim(&self) -> usize {
        1
    }

    /// Joint constraints that box bounds cannot express.
    fn check_admissible(&self, _theta: &[f64]) -> Result<()> {
        Ok(())
    }

    /// `p(from, to)`: density of the next hidden state given the current one.
    fn transition_density(&self, theta: &[f64], from: f64, to: f64) -> f64;

    /// `log f(s | x, s_prev)`; `s_prev = None` is the initial emission.
    fn log_emission_density(&self, theta: &[f64], x: f64, s: &[f64], s_prev: Option<&[f64]>)
        -> f64;

    fn emission_density(&self, theta: &[f64], x: f64, s: &[f64], s_prev: Option<&[f64]>) -> f64 {
        self.log_emission_density(theta, x, s, s_prev).exp()
    }

    /// Stationary density of the hidden chain.
    fn initial_density(&self, theta: &[f64], x: f64) -> f64;

    /// Draws `(X_0, xi_0)` from the stationary law.
    fn sample_initial(&self, theta: &[f64], rng: &mut dyn RngCore) -> (f64, Vec<f64>);

    /// Draws `(X_k, xi_k)` given `X_{k-1} = x` and `xi_{k-1} = s_prev`.
    fn sample_step(
        &self,
        theta: &[f64],
        x: f64,
        s_prev: &[f64],
        rng: &mut dyn RngCore,
    ) -> (f64, Vec<f64>);

    /// Stationary mean and standard deviation of a continuous hidden chain.
    fn stationary_moments(&self, _theta: &[f64]) -> Option<(f64, f64)> {
        None
    }

    /// Number of states of a finite hidden chain.
    fn finite_states(&self) -> Option<usize> {
        None
    }

    /// Finite grids for finite chains; otherwise a trapezoid grid spanning
    /// `DEFAULT_SPAN_SDS` stationary standard deviations on either side of the mean.
    fn default_grid(&self, theta: &[f64]) -> Result<StateGrid> {
        if let Some(k) = self.finite_states() {
            return StateGrid::finite(k);
        }
        let (mean, sd) = self.stationary_moments(theta).ok_or_else(|| {
            Error::Unsupported(format!("{} has no default grid; supply one", self.family()))
        })?;
        StateGrid::centered(mean, sd, DEFAULT_SPAN_SDS, DEFAULT_GRID_POINTS)
    }

    /// Grid used when the data are known in advance.
    fn grid_for_data(&self, theta: &[f64], _obs: &ObservationSeq) -> Result<StateGrid> {
        self.default_grid(theta)
    }

    /// True when the discretized transition depends on the previous observation.
    fn observation_driven(&self) -> bool {
        false
    }

    /// Discretized transition on `grid`. Observation-driven models receive the
    /// previous observation; all others ignore it.
    fn transition_kernel(
        &self,
        theta: &[f64],
        grid: &StateGrid,
        _s_prev: Option<&[f64]>,
    ) -> Result<TransitionKernel> {
        TransitionKernel::tabulate(self, theta, grid)
    }

    /// Stationary density tabulated on `grid`.
    fn initial_values(&self, theta: &[f64], grid: &StateGrid) -> Vec<f64> {
        grid.points()
            .iter()
            .map(|&x| self.initial_density(theta, x))
            .collect()
    }

    /// Checks parameter names against the template and the joint constraints.
    fn validate(&self, theta: &ParamVector) -> Result<()> {
        let template = self.param_template();
        if template.names() != theta.names() {
            return Err(Error::InvalidParams(format!(
                "{} expects parameters {:?}, got {:?}",
                self.family(),
                template.names(),
                theta.names()
            )));
        }
        self.check_admissible(theta.values())
    }
}

/// Simulated hidden path and observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub hidden: Vec<f64>,
    pub observations: ObservationSeq,
}

/// Draws `X_0` from the stationary law, then alternates state transition and
/// emission for `n` further steps; `n + 1` observations in total.
pub fn simulate<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<SimulatedPath> {
    if n < 1 {
        return Err(Error::InvalidExperiment(
            "simulation length must be at least 1".into(),
        ));
    }
    model.validate(theta)?;
    let th = theta.values();
    let dim = model.obs_dim();
    let mut hidden = Vec::with_capacity(n + 1);
    let mut flat = Vec::with_capacity((n + 1) * dim);
    let (mut x, mut s) = model.sample_initial(th, rng);
    hidden.push(x);
    flat.extend_from_slice(&s);
    for _ in 0..n {
        let (nx, ns) = model.sample_step(th, x, &s, rng);
        x = nx;
        s = ns;
        hidden.push(x);
        flat.extend_from_slice(&s);
    }
    Ok(SimulatedPath {
        hidden,
        observations: ObservationSeq::from_flat(flat, dim)?,
    })
}
