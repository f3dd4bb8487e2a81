//! Score, information matrices and the likelihood-equation solver.
//!
//! All derivatives are central finite differences of the normalized
//! log likelihood. The optimizer is BFGS on the unconstrained coordinates.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::grid::StateGrid;
use crate::model::{simulate, StateSpaceModel};
use crate::obs::ObservationSeq;
use crate::operator::{log_likelihood_values, FilterRecursion};
use crate::params::{IntervalMap, ParamVector};
use crate::rng;

pub type Matrix = Vec<Vec<f64>>;

pub const DEFAULT_TOL_GRAD: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 200;
/// Largest condition number accepted for an information matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative step for first derivatives, `eps^(1/3)`.
pub fn default_fd_step() -> f64 {
    f64::EPSILON.cbrt()
}

/// Relative step for second derivatives, `eps^(1/4)`.
pub fn default_hessian_step() -> f64 {
    f64::EPSILON.sqrt().sqrt()
}

/// Central-difference gradient of `f` at `x` with per-component steps.
pub fn fd_gradient<F>(f: F, x: &[f64], steps: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut p = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        p[j] = x[j] + steps[j];
        let fp = f(&p)?;
        p[j] = x[j] - steps[j];
        let fm = f(&p)?;
        p[j] = x[j];
        g.push((fp - fm) / (2.0 * steps[j]));
    }
    Ok(g)
}

/// Central-difference Hessian: three-point stencil on the diagonal, four-point
/// cross differences off it. Exact for quadratics up to rounding.
pub fn fd_hessian<F>(f: F, x: &[f64], steps: &[f64]) -> Result<Matrix>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let q = x.len();
    let f0 = f(x)?;
    let mut h = vec![vec![0.0; q]; q];
    let mut p = x.to_vec();
    for i in 0..q {
        p[i] = x[i] + steps[i];
        let fp = f(&p)?;
        p[i] = x[i] - steps[i];
        let fm = f(&p)?;
        p[i] = x[i];
        h[i][i] = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]);
    }
    for i in 0..q {
        for j in i + 1..q {
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * steps[i];
                p[j] = x[j] + sj * steps[j];
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                + corner(-1.0, -1.0)?)
                / (4.0 * steps[i] * steps[j]);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    Ok(h)
}

/// The log likelihood as a function of a subset of the parameters.
struct Objective<'a, M: StateSpaceModel + ?Sized> {
    model: &'a M,
    grid: &'a StateGrid,
    obs: &'a ObservationSeq,
    base: &'a ParamVector,
    free: Vec<usize>,
}

impl<'a, M: StateSpaceModel + ?Sized> Objective<'a, M> {
    fn new(
        model: &'a M,
        base: &'a ParamVector,
        grid: &'a StateGrid,
        obs: &'a ObservationSeq,
        free: Vec<usize>,
    ) -> Result<Self> {
        model.validate(base)?;
        Ok(Self {
            model,
            grid,
            obs,
            base,
            free,
        })
    }

    fn full(&self, free_vals: &[f64]) -> Vec<f64> {
        let mut v = self.base.values().to_vec();
        for (&i, &x) in self.free.iter().zip(free_vals) {
            v[i] = x;
        }
        v
    }

    fn free_values(&self, theta: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| theta[i]).collect()
    }

    fn loglik(&self, free_vals: &[f64]) -> Result<f64> {
        let full = self.full(free_vals);
        for (k, &i) in self.free.iter().enumerate() {
            let b = self.base.bounds()[i];
            if !b.contains(free_vals[k]) {
                return Err(Error::Inadmissible(format!(
                    "{} = {} outside ({}, {})",
                    self.base.names()[i],
                    free_vals[k],
                    b.lower,
                    b.upper
                )));
            }
        }
        self.model.check_admissible(&full)?;
        log_likelihood_values(self.model, &full, self.grid, self.obs)
    }

    /// Natural-scale steps `rel * max(1, |theta_j|)`, refused when `theta_j ± reach * step`
    /// would leave the parameter space.
    fn steps(&self, free_vals: &[f64], rel: f64, reach: f64) -> Result<Vec<f64>> {
        let mut steps = Vec::with_capacity(free_vals.len());
        for (k, &i) in self.free.iter().enumerate() {
            let h = rel * free_vals[k].abs().max(1.0);
            let b = self.base.bounds()[i];
            if !(b.contains(free_vals[k] - reach * h) && b.contains(free_vals[k] + reach * h)) {
                return Err(Error::BoundaryProximity {
                    index: i,
                    name: self.base.names()[i].clone(),
                });
            }
            steps.push(h);
        }
        Ok(steps)
    }

    fn score(&self, free_vals: &[f64], rel: f64) -> Result<Vec<f64>> {
        let steps = self.steps(free_vals, rel, 2.0)?;
        fd_gradient(|x| self.loglik(x), free_vals, &steps)
    }

    fn hessian(&self, free_vals: &[f64], rel: f64) -> Result<Matrix> {
        let steps = self.steps(free_vals, rel, 2.0)?;
        fd_hessian(|x| self.loglik(x), free_vals, &steps)
    }
}

fn all_indices(theta: &ParamVector) -> Vec<usize> {
    (0..theta.len()).collect()
}

/// Gradient of the log likelihood in the natural parameters.
pub fn score<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    obs: &ObservationSeq,
) -> Result<Vec<f64>> {
    score_with_step(model, theta, grid, obs, default_fd_step())
}

/// [`score`] with relative step `rel_step`.
pub fn score_with_step<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    obs: &ObservationSeq,
    rel_step: f64,
) -> Result<Vec<f64>> {
    let obj = Objective::new(model, theta, grid, obs, all_indices(theta))?;
    obj.score(theta.values(), rel_step)
}

/// Minus the Hessian of the log likelihood in the natural parameters.
pub fn observed_information<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    obs: &ObservationSeq,
) -> Result<Matrix> {
    let obj = Objective::new(model, theta, grid, obs, all_indices(theta))?;
    Ok(negate(obj.hessian(theta.values(), default_hessian_step())?))
}

fn negate(mut m: Matrix) -> Matrix {
    m.iter_mut().flatten().for_each(|v| *v = -*v);
    m
}

fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    let q = m.len();
    DMatrix::from_fn(q, q, |i, j| m[i][j])
}

/// `max |lambda| / min lambda` of a symmetric matrix; infinite unless positive definite.
pub fn condition_number(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let eig = SymmetricEigen::new(to_dmatrix(m)).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(lo > 0.0) {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Inverse of a symmetric positive definite information matrix.
pub fn invert_information(m: &Matrix) -> Result<Matrix> {
    let condition = condition_number(m);
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularInformation { condition });
    }
    let chol = to_dmatrix(m)
        .cholesky()
        .ok_or(Error::SingularInformation { condition })?;
    let inv = chol.inverse();
    Ok((0..m.len())
        .map(|i| (0..m.len()).map(|j| inv[(i, j)]).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Converged once the sup norm of the score falls below `tol_grad * max(1, |loglik|)`.
    pub tol_grad: f64,
    pub max_iter: usize,
    /// Relative step for scores; `None` means `eps^(1/3)`.
    pub fd_step: Option<f64>,
    pub n_starts: usize,
    /// Standard deviation of the unconstrained jitter for extra starts.
    pub start_jitter: f64,
    pub seed: u64,
    pub interval_map: IntervalMap,
    /// Names of the parameters to fit; `None` fits all of them.
    pub free: Option<Vec<String>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol_grad: DEFAULT_TOL_GRAD,
            max_iter: DEFAULT_MAX_ITER,
            fd_step: None,
            n_starts: 1,
            start_jitter: 0.25,
            seed: 0,
            interval_map: IntervalMap::Tanh,
            free: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub score_norm: f64,
}

/// Outcome of [`fit_mle`]. Vectors and matrices run over the fitted parameters
/// listed in `free`, in parameter order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: ParamVector,
    pub free: Vec<String>,
    pub loglik: f64,
    pub score_at_hat: Vec<f64>,
    pub observed_info: Matrix,
    /// `observed_info / T` with `T` the number of observations.
    pub fisher_info_hat: Matrix,
    pub std_errors: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub starts: usize,
    pub trace: Vec<TraceEntry>,
}

/// Score tolerance at a given log likelihood; finite-difference scores carry
/// noise proportional to `|loglik|`.
fn score_tolerance(tol_grad: f64, loglik: f64) -> f64 {
    tol_grad * loglik.abs().max(1.0)
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Run {
    free_vals: Vec<f64>,
    loglik: f64,
    converged: bool,
    iterations: usize,
    trace: Vec<TraceEntry>,
}

struct Solver<'o, 'a, M: StateSpaceModel + ?Sized> {
    obj: &'o Objective<'a, M>,
    opts: &'o FitOptions,
    rel: f64,
}

impl<M: StateSpaceModel + ?Sized> Solver<'_, '_, M> {
    fn bounds(&self, k: usize) -> crate::params::Bounds {
        self.obj.base.bounds()[self.obj.free[k]]
    }

    fn to_natural(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(k, &v)| self.bounds(k).from_unconstrained(v, self.opts.interval_map))
            .collect()
    }

    fn to_u(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, &v)| self.bounds(k).to_unconstrained(v, self.opts.interval_map))
            .collect()
    }

    /// Minus the log likelihood; `+inf` outside the parameter space.
    fn cost(&self, u: &[f64]) -> f64 {
        match self.obj.loglik(&self.to_natural(u)) {
            Ok(l) if l.is_finite() => -l,
            _ => f64::INFINITY,
        }
    }

    /// Gradient of the cost in `u` and the natural score at the same point.
    fn gradient(&self, u: &[f64], fu: f64) -> (Vec<f64>, Vec<f64>) {
        let x = self.to_natural(u);
        let jac: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(k, &v)| self.bounds(k).derivative(v, self.opts.interval_map))
            .collect();
        if let Ok(s) = self.obj.score(&x, self.rel) {
            let g = s.iter().zip(&jac).map(|(s, j)| -s * j).collect();
            return (g, s);
        }
        // Too close to a bound for natural-scale steps: difference in u instead.
        let mut p = u.to_vec();
        let mut g = Vec::with_capacity(u.len());
        for k in 0..u.len() {
            let h = self.rel * u[k].abs().max(1.0);
            p[k] = u[k] + h;
            let fp = self.cost(&p);
            p[k] = u[k] - h;
            let fm = self.cost(&p);
            p[k] = u[k];
            g.push(match (fp.is_finite(), fm.is_finite()) {
                (true, true) => (fp - fm) / (2.0 * h),
                (true, false) => (fp - fu) / h,
                (false, true) => (fu - fm) / h,
                _ => 0.0,
            });
        }
        let s = g.iter().zip(&jac).map(|(g, j)| -g / j).collect();
        (g, s)
    }

    fn initial_inverse_hessian(&self, u: &[f64], g: &[f64]) -> DMatrix<f64> {
        let q = u.len();
        let steps: Vec<f64> = u
            .iter()
            .map(|v| default_hessian_step() * v.abs().max(1.0))
            .collect();
        let newton = fd_hessian(
            |v| {
                let c = self.cost(v);
                if c.is_finite() {
                    Ok(c)
                } else {
                    Err(Error::FilterCollapse { step: 0 })
                }
            },
            u,
            &steps,
        )
        .ok()
        .and_then(|h| to_dmatrix(&h).cholesky())
        .map(|c| c.inverse());
        newton.unwrap_or_else(|| DMatrix::identity(q, q) / sup_norm(g).max(1.0))
    }

    fn run(&self, start: &[f64]) -> Result<Run> {
        let q = start.len();
        let mut u = self.to_u(start);
        let mut fu = self.cost(&u);
        if !fu.is_finite() {
            return Err(Error::Inadmissible(
                "log likelihood is not finite at the starting point".into(),
            ));
        }
        let (mut g, mut s) = self.gradient(&u, fu);
        let full = |u: &[f64]| self.obj.full(&self.to_natural(u));
        let mut trace = vec![TraceEntry {
            iteration: 0,
            theta: full(&u),
            loglik: -fu,
            score_norm: sup_norm(&s),
        }];
        if sup_norm(&s) < score_tolerance(self.opts.tol_grad, fu) {
            return Ok(Run {
                free_vals: self.to_natural(&u),
                loglik: -fu,
                converged: true,
                iterations: 0,
                trace,
            });
        }
        let mut hinv = self.initial_inverse_hessian(&u, &g);
        let mut converged = false;
        let mut iterations = 0;
        let mut fresh = false;
        let mut flat = 0;
        while iterations < self.opts.max_iter {
            let gv = DVector::from_column_slice(&g);
            let mut d: Vec<f64> = (-(&hinv * &gv)).iter().cloned().collect();
            if dot(&d, &g) >= 0.0 {
                hinv = DMatrix::identity(q, q) / sup_norm(&g).max(1.0);
                d = g.iter().map(|v| -v / sup_norm(&g).max(1.0)).collect();
            }
            let dn = sup_norm(&d);
            if dn > 5.0 {
                d.iter_mut().for_each(|v| *v *= 5.0 / dn);
            }
            let slope = dot(&d, &g);
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let cand: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + step * b).collect();
                let fc = self.cost(&cand);
                if fc.is_finite() && fc <= fu + 1e-4 * step * slope {
                    accepted = Some((cand, fc));
                    break;
                }
                step *= 0.5;
            }
            let Some((un, fnew)) = accepted else {
                if fresh {
                    break;
                }
                hinv = DMatrix::identity(q, q) / sup_norm(&g).max(1.0);
                fresh = true;
                continue;
            };
            fresh = false;
            iterations += 1;
            flat = if fu - fnew <= 8.0 * f64::EPSILON * fu.abs() {
                flat + 1
            } else {
                0
            };
            let (gn, sn) = self.gradient(&un, fnew);
            let sk = DVector::from_iterator(q, un.iter().zip(&u).map(|(a, b)| a - b));
            let yk = DVector::from_iterator(q, gn.iter().zip(&g).map(|(a, b)| a - b));
            let sy = sk.dot(&yk);
            if sy > 1e-12 * sk.norm() * yk.norm() {
                let rho = 1.0 / sy;
                let id = DMatrix::<f64>::identity(q, q);
                let left = &id - rho * &sk * yk.transpose();
                let right = &id - rho * &yk * sk.transpose();
                hinv = &left * &hinv * &right + rho * &sk * sk.transpose();
            }
            u = un;
            fu = fnew;
            g = gn;
            s = sn;
            trace.push(TraceEntry {
                iteration: iterations,
                theta: full(&u),
                loglik: -fu,
                score_norm: sup_norm(&s),
            });
            if sup_norm(&s) < score_tolerance(self.opts.tol_grad, fu) {
                converged = true;
                break;
            }
            if flat >= 3 {
                break;
            }
        }
        Ok(Run {
            free_vals: self.to_natural(&u),
            loglik: -fu,
            converged,
            iterations,
            trace,
        })
    }
}

fn free_indices(theta: &ParamVector, free: &Option<Vec<String>>) -> Result<Vec<usize>> {
    match free {
        None => Ok(all_indices(theta)),
        Some(names) => {
            let mut idx = Vec::with_capacity(names.len());
            for n in names {
                idx.push(
                    theta
                        .index_of(n)
                        .ok_or_else(|| Error::InvalidParams(format!("no parameter named {n}")))?,
                );
            }
            idx.sort_unstable();
            idx.dedup();
            if idx.is_empty() {
                return Err(Error::InvalidParams("no free parameters".into()));
            }
            Ok(idx)
        }
    }
}

/// Solves the likelihood equation from `theta_init` by quasi-Newton ascent.
///
/// Parameters not listed in `opts.free` stay at their initial values. Extra
/// starts (`opts.n_starts > 1`) jitter the unconstrained coordinates and the
/// best converged run wins.
pub fn fit_mle<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta_init: &ParamVector,
    grid: &StateGrid,
    obs: &ObservationSeq,
    opts: &FitOptions,
) -> Result<FitResult> {
    if !(opts.tol_grad > 0.0) {
        return Err(Error::InvalidParams("tol_grad must be positive".into()));
    }
    let free = free_indices(theta_init, &opts.free)?;
    let obj = Objective::new(model, theta_init, grid, obs, free)?;
    let rel = opts.fd_step.unwrap_or_else(default_fd_step);
    let solver = Solver {
        obj: &obj,
        opts,
        rel,
    };
    let x0 = obj.free_values(theta_init.values());

    let mut best = solver.run(&x0)?;
    let mut r = rng::seeded(opts.seed);
    let u0 = solver.to_u(&x0);
    for _ in 1..opts.n_starts.max(1) {
        let u: Vec<f64> = u0
            .iter()
            .map(|v| v + opts.start_jitter * rng::std_normal(&mut r))
            .collect();
        let Ok(run) = solver.run(&solver.to_natural(&u)) else {
            continue;
        };
        if (run.converged && !best.converged)
            || (run.converged == best.converged && run.loglik > best.loglik)
        {
            best = run;
        }
    }

    let theta_hat = theta_init.with_values(&obj.full(&best.free_vals))?;
    let score_at_hat = obj
        .score(&best.free_vals, rel)
        .unwrap_or_else(|_| vec![f64::NAN; obj.free.len()]);
    let converged =
        best.converged && sup_norm(&score_at_hat) < score_tolerance(opts.tol_grad, best.loglik);
    let q = obj.free.len();
    let (observed_info, std_errors) = match obj.hessian(&best.free_vals, default_hessian_step()) {
        Ok(h) => {
            let info = negate(h);
            match invert_information(&info) {
                Ok(inv) => {
                    let se = (0..q).map(|i| inv[i][i].sqrt()).collect();
                    (info, se)
                }
                Err(e) if converged => return Err(e),
                Err(_) => (info, vec![f64::NAN; q]),
            }
        }
        Err(e) if converged => return Err(e),
        Err(_) => (vec![vec![f64::NAN; q]; q], vec![f64::NAN; q]),
    };
    let t = obs.len() as f64;
    let fisher_info_hat = observed_info
        .iter()
        .map(|r| r.iter().map(|v| v / t).collect())
        .collect();
    Ok(FitResult {
        theta_hat,
        free: obj
            .free
            .iter()
            .map(|&i| theta_init.names()[i].clone())
            .collect(),
        loglik: best.loglik,
        score_at_hat,
        observed_info,
        fisher_info_hat,
        std_errors,
        converged,
        iterations: best.iterations,
        starts: opts.n_starts.max(1),
        trace: best.trace,
    })
}

/// Two Monte Carlo estimates of the per-observation Fisher information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherEstimate {
    /// Average outer product of the per-step score increments after burn-in.
    pub outer_product: Matrix,
    /// Average of `-(1/T) * Hessian` over replications.
    pub hessian: Matrix,
    /// Largest `|I_ij - I_ji|` of the outer-product estimate before symmetrizing.
    pub asymmetry: f64,
    pub reps: usize,
    pub n_per_rep: usize,
    pub burn_in: usize,
    /// Set when `reps * n_per_rep < 1000`.
    pub low_sample: bool,
}

/// Relative Frobenius distance `||a - b|| / ||b||`.
pub fn relative_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            num += (x - y) * (x - y);
            den += y * y;
        }
    }
    (num / den).sqrt()
}

/// Per-step log-likelihood increments at `theta`.
fn increments<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &[f64],
    grid: &StateGrid,
    obs: &ObservationSeq,
) -> Result<Vec<f64>> {
    let rec = FilterRecursion::unchecked(model, theta, grid)?;
    let mut out = Vec::with_capacity(obs.len());
    rec.run(obs, |h| out.push(h.log_increment))?;
    Ok(out)
}

/// Monte Carlo Fisher information at `theta` from `reps` simulated paths of
/// `n_per_rep` transitions. Replication `r` uses stream `r` of `seed`.
pub fn fisher_information_mc<M, E>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    reps: usize,
    n_per_rep: usize,
    seed: u64,
    exec: &E,
) -> Result<FisherEstimate>
where
    M: StateSpaceModel + ?Sized,
    E: Executor,
{
    if reps == 0 || n_per_rep < 1 {
        return Err(Error::InvalidExperiment(
            "need at least one replication of length 1".into(),
        ));
    }
    model.validate(theta)?;
    let q = theta.len();
    let burn_in = (n_per_rep / 10).min(200);
    let rel = default_fd_step();
    let obj_steps = {
        let obs = ObservationSeq::from_scalars(&[0.0])?;
        Objective::new(model, theta, grid, &obs, all_indices(theta))?.steps(
            theta.values(),
            rel,
            2.0,
        )?
    };
    let per_rep = exec.map(reps, |r| -> Result<(Matrix, usize, Matrix)> {
        let mut g = rng::replication_rng(seed, r as u64);
        let obs = simulate(model, theta, n_per_rep, &mut g)?.observations;
        let mut d = vec![vec![0.0; obs.len()]; q];
        let mut p = theta.values().to_vec();
        for j in 0..q {
            p[j] = theta.values()[j] + obj_steps[j];
            let up = increments(model, &p, grid, &obs)?;
            p[j] = theta.values()[j] - obj_steps[j];
            let dn = increments(model, &p, grid, &obs)?;
            p[j] = theta.values()[j];
            for k in 0..obs.len() {
                d[j][k] = (up[k] - dn[k]) / (2.0 * obj_steps[j]);
            }
        }
        let mut op = vec![vec![0.0; q]; q];
        for k in burn_in..obs.len() {
            for a in 0..q {
                for b in 0..q {
                    op[a][b] += d[a][k] * d[b][k];
                }
            }
        }
        let obj = Objective::new(model, theta, grid, &obs, all_indices(theta))?;
        let h = obj.hessian(theta.values(), default_hessian_step())?;
        Ok((
            op,
            obs.len() - burn_in,
            h.iter()
                .map(|r| r.iter().map(|v| -v / obs.len() as f64).collect())
                .collect(),
        ))
    });
    let mut op = vec![vec![0.0; q]; q];
    let mut hess = vec![vec![0.0; q]; q];
    let mut steps = 0usize;
    for res in per_rep {
        let (o, n, h) = res?;
        steps += n;
        for a in 0..q {
            for b in 0..q {
                op[a][b] += o[a][b];
                hess[a][b] += h[a][b] / reps as f64;
            }
        }
    }
    let mut asymmetry = 0.0f64;
    for a in 0..q {
        for b in 0..q {
            op[a][b] /= steps as f64;
        }
    }
    for a in 0..q {
        for b in a + 1..q {
            asymmetry = asymmetry.max((op[a][b] - op[b][a]).abs());
            let m = 0.5 * (op[a][b] + op[b][a]);
            op[a][b] = m;
            op[b][a] = m;
        }
    }
    Ok(FisherEstimate {
        outer_product: op,
        hessian: hess,
        asymmetry,
        reps,
        n_per_rep,
        burn_in,
        low_sample: reps * n_per_rep < 1000,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FiniteHmm;

    #[test]
    fn hessian_of_quadratic_is_exact() {
        let f = |x: &[f64]| -> Result<f64> {
            Ok(1.5 * x[0] * x[0] - 0.7 * x[0] * x[1] + 2.0 * x[1] * x[1] + x[0])
        };
        let h = fd_hessian(f, &[0.3, -1.1], &[1e-2, 1e-2]).unwrap();
        let want = [[3.0, -0.7], [-0.7, 4.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[i][j] - want[i][j]).abs() < 1e-9, "{:?}", h);
            }
        }
    }

    #[test]
    fn iid_variance_score_vanishes_at_sample_moment() {
        // Single-state chain: xi_k i.i.d. N(0, v) once phi is held at zero.
        let model = FiniteHmm::iid_gaussian(0.0);
        let mut r = rng::seeded(1);
        let xs: Vec<f64> = (0..500).map(|_| rng::std_normal(&mut r) * 1.3).collect();
        let obs = ObservationSeq::from_scalars(&xs).unwrap();
        let vhat = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let grid = StateGrid::finite(1).unwrap();
        let theta = model.params(0.0, vhat).unwrap();
        let s = score(&model, &theta, &grid, &obs).unwrap();
        assert!(s[1].abs() < 1e-8, "{s:?}");
    }

    #[test]
    fn start_at_optimum_returns_immediately() {
        let model = FiniteHmm::iid_gaussian(0.0);
        let xs = [0.5, -1.0, 0.3, 2.0, -0.4];
        let obs = ObservationSeq::from_scalars(&xs).unwrap();
        let vhat = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let grid = StateGrid::finite(1).unwrap();
        let theta = model.params(0.0, vhat).unwrap();
        let opts = FitOptions {
            free: Some(vec!["sigma2".into()]),
            ..FitOptions::default()
        };
        let fit = fit_mle(&model, &theta, &grid, &obs, &opts).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.iterations, 0);
        assert!((fit.std_errors[0] - vhat * (2.0 / xs.len() as f64).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn boundary_proximity_is_reported() {
        let model = FiniteHmm::iid_gaussian(0.0);
        let obs = ObservationSeq::from_scalars(&[0.1, 0.2]).unwrap();
        let grid = StateGrid::finite(1).unwrap();
        let theta = model.params(1.0 - 1e-7, 1.0).unwrap();
        let err = score(&model, &theta, &grid, &obs).unwrap_err();
        assert!(
            matches!(err, Error::BoundaryProximity { index: 0, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn singular_information_reports_condition() {
        let m = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(matches!(
            invert_information(&m),
            Err(Error::SingularInformation { .. })
        ));
        let inv = invert_information(&vec![vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert!((inv[0][0] - 0.5).abs() < 1e-15 && (inv[1][1] - 0.25).abs() < 1e-15);
    }
}
