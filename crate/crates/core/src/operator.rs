//! The forward filter recursion on a grid.
//!
//! With filter density `h` on grid points `x_i` and weights `w_i`, one step maps
//!
//! ```text
//! h'(x_i) ∝ f(s | x_i, s_prev) * Σ_j w_j p(x_j, x_i) h(x_j)
//! ```
//!
//! and renormalizes. The logs of the removed normalizers add up to the
//! log likelihood of the observations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::filter::FilterState;
use crate::grid::StateGrid;
use crate::model::StateSpaceModel;
use crate::obs::ObservationSeq;
use crate::params::ParamVector;

/// Discretized transition acting on filter densities.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionKernel {
    /// `mix[i * n + j] = w_j p(x_j, x_i)`: row `i` collects the mass flowing into `x_i`.
    Dense { n: usize, mix: Vec<f64> },
    /// `(to, from, coef)` triples with `(K h)_to += coef * h_from`.
    Sparse {
        n: usize,
        entries: Vec<(usize, usize, f64)>,
    },
}

impl TransitionKernel {
    /// Tabulates `p` on the grid. On continuous grids each source row is
    /// rescaled so the quadrature of `p(x_j, .)` is exactly one.
    pub fn tabulate<M: StateSpaceModel + ?Sized>(
        model: &M,
        theta: &[f64],
        grid: &StateGrid,
    ) -> Result<Self> {
        let n = grid.len();
        let pts = grid.points();
        let w = grid.weights();
        let mut mix = vec![0.0; n * n];
        let mut row = vec![0.0; n];
        for j in 0..n {
            let mut total = 0.0;
            for i in 0..n {
                let p = model.transition_density(theta, pts[j], pts[i]);
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::NonFiniteDensity {
                        step: 0,
                        index: i,
                        x: pts[i],
                    });
                }
                row[i] = p;
                total += w[i] * p;
            }
            let scale = if grid.is_finite_state() {
                1.0
            } else if total > 0.0 {
                1.0 / total
            } else {
                return Err(Error::InvalidGrid(format!(
                    "transition from x = {} puts no mass on the grid",
                    pts[j]
                )));
            };
            for i in 0..n {
                mix[i * n + j] = w[j] * row[i] * scale;
            }
        }
        Ok(Self::Dense { n, mix })
    }

    pub fn size(&self) -> usize {
        match self {
            Self::Dense { n, .. } | Self::Sparse { n, .. } => *n,
        }
    }

    /// `out_i = Σ_j w_j p(x_j, x_i) h_j`.
    pub fn propagate(&self, h: &[f64], out: &mut [f64]) {
        match self {
            Self::Dense { n, mix } => {
                for (i, o) in out.iter_mut().enumerate().take(*n) {
                    *o = dot(&mix[i * n..(i + 1) * n], h);
                }
            }
            Self::Sparse { entries, .. } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for &(to, from, c) in entries {
                    out[to] += c * h[from];
                }
            }
        }
    }

    /// `out_i = Σ_j w_j p(x_i, x_j) v_j`, the transposed orientation.
    pub fn propagate_transposed(&self, v: &[f64], weights: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        match self {
            Self::Dense { n, mix } => {
                for j in 0..*n {
                    let vj = v[j] * weights[j];
                    if vj == 0.0 {
                        continue;
                    }
                    let row = &mix[j * n..(j + 1) * n];
                    for i in 0..*n {
                        out[i] += row[i] / weights[i] * vj;
                    }
                }
            }
            Self::Sparse { entries, .. } => {
                for &(to, from, c) in entries {
                    out[from] += c / weights[from] * weights[to] * v[to];
                }
            }
        }
    }

    /// `Σ_j w_j p(x_j, x_i)` for every `i`.
    pub fn inflow(&self) -> Vec<f64> {
        let n = self.size();
        let mut out = vec![0.0; n];
        self.propagate(&vec![1.0; n], &mut out);
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Orientation {
    Corrected,
    #[cfg_attr(not(feature = "legacy-orientation"), allow(dead_code))]
    Transposed,
}

/// A model, parameter and grid bundled with the cached transition kernel.
pub struct FilterRecursion<'a, M: StateSpaceModel + ?Sized> {
    model: &'a M,
    theta: &'a [f64],
    grid: &'a StateGrid,
    kernel: Option<TransitionKernel>,
    orientation: Orientation,
}

impl<'a, M: StateSpaceModel + ?Sized> FilterRecursion<'a, M> {
    pub fn new(model: &'a M, theta: &'a ParamVector, grid: &'a StateGrid) -> Result<Self> {
        model.validate(theta)?;
        Self::unchecked(model, theta.values(), grid)
    }

    pub(crate) fn unchecked(model: &'a M, theta: &'a [f64], grid: &'a StateGrid) -> Result<Self> {
        if let Some(k) = model.finite_states() {
            if grid.len() != k || !grid.is_finite_state() {
                return Err(Error::InvalidGrid(format!(
                    "{} needs the {k}-point finite grid",
                    model.family()
                )));
            }
        }
        let kernel = if model.observation_driven() {
            None
        } else {
            Some(model.transition_kernel(theta, grid, None)?)
        };
        Ok(Self {
            model,
            theta,
            grid,
            kernel,
            orientation: Orientation::Corrected,
        })
    }

    pub fn grid(&self) -> &StateGrid {
        self.grid
    }

    pub fn theta(&self) -> &[f64] {
        self.theta
    }

    /// Log emission densities on the grid, checked for NaN and `+inf`.
    fn log_emissions(&self, s: &[f64], s_prev: Option<&[f64]>, step: usize) -> Result<Vec<f64>> {
        let pts = self.grid.points();
        let mut out = Vec::with_capacity(pts.len());
        for (i, &x) in pts.iter().enumerate() {
            let l = self.model.log_emission_density(self.theta, x, s, s_prev);
            if l.is_nan() || l == f64::INFINITY {
                return Err(Error::NonFiniteDensity { step, index: i, x });
            }
            out.push(l);
        }
        Ok(out)
    }

    /// Shifts log emissions by their maximum; returns the shift.
    fn scaled_emissions(
        &self,
        s: &[f64],
        s_prev: Option<&[f64]>,
        step: usize,
    ) -> Result<(Vec<f64>, f64)> {
        let mut l = self.log_emissions(s, s_prev, step)?;
        let m = l.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if m == f64::NEG_INFINITY {
            return Err(Error::FilterCollapse { step });
        }
        for v in l.iter_mut() {
            *v = (*v - m).exp();
        }
        Ok((l, m))
    }

    /// Stationary density times the initial emission, normalized.
    pub fn initial(&self, s0: &[f64]) -> Result<FilterState> {
        let pi = self.model.initial_values(self.theta, self.grid);
        if let Some(i) = pi.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::NonFiniteDensity {
                step: 0,
                index: i,
                x: self.grid.points()[i],
            });
        }
        let (f, shift) = self.scaled_emissions(s0, None, 0)?;
        let raw: Vec<f64> = pi.iter().zip(&f).map(|(a, b)| a * b).collect();
        FilterState::normalize(raw, shift, self.grid.weights(), 0.0, 0)
    }

    fn kernel_for(&self, s_prev: &[f64]) -> Result<alloc::borrow::Cow<'_, TransitionKernel>> {
        match &self.kernel {
            Some(k) => Ok(alloc::borrow::Cow::Borrowed(k)),
            None => Ok(alloc::borrow::Cow::Owned(self.model.transition_kernel(
                self.theta,
                self.grid,
                Some(s_prev),
            )?)),
        }
    }

    /// One normalized step of the recursion.
    pub fn step(&self, h: &FilterState, s: &[f64], s_prev: &[f64]) -> Result<FilterState> {
        let n = self.grid.len();
        if h.len() != n {
            return Err(Error::GridMismatch {
                left: h.len(),
                right: n,
            });
        }
        let step = h.step + 1;
        let kernel = self.kernel_for(s_prev)?;
        let (f, shift) = self.scaled_emissions(s, Some(s_prev), step)?;
        let mut out = vec![0.0; n];
        match self.orientation {
            Orientation::Corrected => {
                kernel.propagate(&h.values, &mut out);
                for (o, fi) in out.iter_mut().zip(&f) {
                    *o *= fi;
                }
            }
            Orientation::Transposed => {
                let v: Vec<f64> = h.values.iter().zip(&f).map(|(a, b)| a * b).collect();
                kernel.propagate_transposed(&v, self.grid.weights(), &mut out);
            }
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteDensity {
                step,
                index: i,
                x: self.grid.points()[i],
            });
        }
        FilterState::normalize(out, shift, self.grid.weights(), h.log_norm, step)
    }

    /// The unnormalized operator applied to arbitrary nonnegative values,
    /// with the true (unshifted) emission density.
    pub fn apply_raw(&self, values: &[f64], s: &[f64], s_prev: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.len();
        if values.len() != n {
            return Err(Error::GridMismatch {
                left: values.len(),
                right: n,
            });
        }
        let kernel = self.kernel_for(s_prev)?;
        let mut out = vec![0.0; n];
        kernel.propagate(values, &mut out);
        let logf = self.log_emissions(s, Some(s_prev), 1)?;
        for (o, l) in out.iter_mut().zip(logf) {
            *o *= l.exp();
        }
        Ok(out)
    }

    /// Emission densities `f(s | x_i, s_prev)` on the grid.
    pub fn emissions(&self, s: &[f64], s_prev: Option<&[f64]>) -> Result<Vec<f64>> {
        Ok(self
            .log_emissions(s, s_prev, 0)?
            .into_iter()
            .map(f64::exp)
            .collect())
    }

    /// `Σ_j w_j p(x_j, x_i)` on the grid for the kernel used after `s_prev`.
    pub fn kernel_inflow(&self, s_prev: &[f64]) -> Result<Vec<f64>> {
        Ok(self.kernel_for(s_prev)?.inflow())
    }

    /// Runs the whole sequence, handing every filter to `visit`.
    pub fn run(
        &self,
        obs: &ObservationSeq,
        mut visit: impl FnMut(&FilterState),
    ) -> Result<FilterState> {
        if obs.dim() != self.model.obs_dim() {
            return Err(Error::InvalidObservations(format!(
                "{} expects observations of dimension {}, got {}",
                self.model.family(),
                self.model.obs_dim(),
                obs.dim()
            )));
        }
        if let Some(k) = obs.as_flat().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidObservations(format!(
                "non-finite value at step {}",
                k / obs.dim()
            )));
        }
        let mut h = self.initial(obs.row(0))?;
        visit(&h);
        for k in 1..obs.len() {
            h = self.step(&h, obs.row(k), obs.row(k - 1))?;
            visit(&h);
        }
        Ok(h)
    }
}

/// Per-step log increments and their sum.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogLikBreakdown {
    pub increments: Vec<f64>,
    pub total: f64,
}

/// Normalized initial filter `h_0 ∝ pi(x) f(s0 | x)`.
pub fn initial_filter<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    s0: &[f64],
) -> Result<FilterState> {
    FilterRecursion::new(model, theta, grid)?.initial(s0)
}

/// One normalized step from `h`. Builds the kernel on every call; use
/// [`FilterRecursion`] in loops.
pub fn apply_operator<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    h: &FilterState,
    s: &[f64],
    s_prev: &[f64],
) -> Result<FilterState> {
    FilterRecursion::new(model, theta, grid)?.step(h, s, s_prev)
}

/// Final filter after processing every observation.
pub fn run_filter<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    obs: &ObservationSeq,
) -> Result<FilterState> {
    FilterRecursion::new(model, theta, grid)?.run(obs, |_| {})
}

/// Log likelihood of `xi_0..xi_n` with its per-step increments.
pub fn log_likelihood<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    obs: &ObservationSeq,
) -> Result<LogLikBreakdown> {
    let rec = FilterRecursion::new(model, theta, grid)?;
    breakdown(&rec, obs)
}

fn breakdown<M: StateSpaceModel + ?Sized>(
    rec: &FilterRecursion<'_, M>,
    obs: &ObservationSeq,
) -> Result<LogLikBreakdown> {
    let mut increments = Vec::with_capacity(obs.len());
    let last = rec.run(obs, |h| increments.push(h.log_increment))?;
    Ok(LogLikBreakdown {
        increments,
        total: last.log_norm,
    })
}

/// Log likelihood from raw values (no admissibility or name checks).
pub(crate) fn log_likelihood_values<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &[f64],
    grid: &StateGrid,
    obs: &ObservationSeq,
) -> Result<f64> {
    let rec = FilterRecursion::unchecked(model, theta, grid)?;
    Ok(rec.run(obs, |_| {})?.log_norm)
}

/// Same recursion with the kernel applied in the transposed orientation,
/// `h'(x_i) ∝ Σ_j w_j p(x_i, x_j) f(s | x_j) h(x_j)`. Kept for regression
/// tests against the corrected form.
#[cfg(feature = "legacy-orientation")]
pub fn log_likelihood_transposed<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    obs: &ObservationSeq,
) -> Result<LogLikBreakdown> {
    let mut rec = FilterRecursion::new(model, theta, grid)?;
    rec.orientation = Orientation::Transposed;
    breakdown(&rec, obs)
}

/// Largest number of hidden paths [`brute_force_loglik`] will enumerate.
pub const MAX_ENUMERATED_PATHS: f64 = 1e7;

/// Log likelihood by summing over every hidden path on the grid, using raw
/// pointwise densities and quadrature weights.
pub fn brute_force_loglik<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    obs: &ObservationSeq,
) -> Result<f64> {
    model.validate(theta)?;
    if model.observation_driven() {
        return Err(Error::Unsupported(format!(
            "{} has an observation-driven transition; path enumeration is not available",
            model.family()
        )));
    }
    let th = theta.values();
    let g = grid.len();
    let steps = obs.len();
    let paths = (g as f64).powi(steps as i32);
    if paths > MAX_ENUMERATED_PATHS {
        return Err(Error::EnumerationTooLarge { paths });
    }
    let pts = grid.points();
    let w = grid.weights();
    let init: Vec<f64> = (0..g)
        .map(|i| {
            w[i] * model.initial_density(th, pts[i])
                * model.emission_density(th, pts[i], obs.row(0), None)
        })
        .collect();
    let mut emis = Vec::with_capacity(steps);
    for k in 1..steps {
        emis.push(
            (0..g)
                .map(|i| {
                    w[i] * model.emission_density(th, pts[i], obs.row(k), Some(obs.row(k - 1)))
                })
                .collect::<Vec<_>>(),
        );
    }
    let trans: Vec<f64> = (0..g * g)
        .map(|t| model.transition_density(th, pts[t / g], pts[t % g]))
        .collect();

    let mut idx = vec![0usize; steps];
    let mut total = 0.0;
    loop {
        let mut prod = init[idx[0]];
        for k in 1..steps {
            prod *= trans[idx[k - 1] * g + idx[k]] * emis[k - 1][idx[k]];
        }
        total += prod;
        let mut k = steps;
        loop {
            if k == 0 {
                return if total > 0.0 && total.is_finite() {
                    Ok(total.ln())
                } else {
                    Err(Error::FilterCollapse { step: steps - 1 })
                };
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < g {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// `(1/n) Σ_{k=1}^n g(h_k)` over the filters after each observation past the first.
pub fn ergodic_average<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    obs: &ObservationSeq,
    g: impl Fn(&FilterState) -> f64,
) -> Result<f64> {
    if obs.len() < 2 {
        return Err(Error::InvalidObservations(
            "ergodic average needs at least two observations".into(),
        ));
    }
    let rec = FilterRecursion::new(model, theta, grid)?;
    let mut sum = 0.0;
    rec.run(obs, |h| {
        if h.step > 0 {
            sum += g(h);
        }
    })?;
    Ok(sum / (obs.len() - 1) as f64)
}
