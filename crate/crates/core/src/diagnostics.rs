//! Numerical checks of the contraction, moment and ratio conditions behind
//! the asymptotic theory, plus Kullback-Leibler estimates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::filter::{sup_distance, FilterState};
use crate::grid::StateGrid;
use crate::model::{simulate, StateSpaceModel};
use crate::obs::ObservationSeq;
use crate::operator::{log_likelihood_values, FilterRecursion, TransitionKernel};
use crate::params::ParamVector;
use crate::{rng, stats};

/// Per-step Lipschitz constants of the unnormalized operator in the sup norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// Largest ratio `d(P h1, P h2) / d(h1, h2)` seen over random pairs: a lower bound.
    pub lower: Vec<f64>,
    /// `max_i f(s | x_i) Σ_j w_j p(x_j, x_i)`: an upper bound.
    pub upper: Vec<f64>,
    pub lyapunov_lower: f64,
    pub lyapunov_upper: f64,
}

/// A random normalized filter with i.i.d. exponential values.
fn random_filter(grid: &StateGrid, rng: &mut dyn rand::RngCore) -> Vec<f64> {
    let raw: Vec<f64> = (0..grid.len()).map(|_| rng::std_exp(rng)).collect();
    let m = grid.integrate_values(&raw);
    raw.into_iter().map(|v| v / m).collect()
}

/// Brackets the Lipschitz constant of `h -> P(xi_k) h` at every step `k = 1..n`.
pub fn estimate_lipschitz<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    obs: &ObservationSeq,
    pairs: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    if pairs < 2 {
        return Err(Error::InvalidExperiment(
            "need at least two filter pairs".into(),
        ));
    }
    if obs.len() < 2 {
        return Err(Error::InvalidObservations(
            "need at least two observations".into(),
        ));
    }
    let rec = FilterRecursion::new(model, theta, grid)?;
    let mut r = rng::seeded(seed);
    let mut lower = Vec::with_capacity(obs.len() - 1);
    let mut upper = Vec::with_capacity(obs.len() - 1);
    for k in 1..obs.len() {
        let (s, sp) = (obs.row(k), obs.row(k - 1));
        let mut best = 0.0f64;
        for _ in 0..pairs {
            let h1 = random_filter(grid, &mut r);
            let h2 = random_filter(grid, &mut r);
            let d = sup_distance(&h1, &h2)?;
            if d == 0.0 {
                continue;
            }
            let dp = sup_distance(&rec.apply_raw(&h1, s, sp)?, &rec.apply_raw(&h2, s, sp)?)?;
            best = best.max(dp / d);
        }
        lower.push(best);
        let f = rec.emissions(s, Some(sp))?;
        let inflow = rec.kernel_inflow(sp)?;
        upper.push(f.iter().zip(&inflow).fold(0.0f64, |m, (a, b)| m.max(a * b)));
    }
    let mean_log = |v: &[f64]| v.iter().map(|x| x.ln()).sum::<f64>() / v.len() as f64;
    Ok(LipschitzReport {
        lyapunov_lower: mean_log(&lower),
        lyapunov_upper: mean_log(&upper),
        lower,
        upper,
    })
}

/// Maximizes a unimodal function on `[a, b]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `g(s0, s1) = sup_{x0} ∫ p(x0, x1) f(s1 | x1, s0) m(dx1)`.
///
/// The integral is the grid quadrature with the raw transition density; the
/// sup runs over a scan of the grid range refined by golden-section search.
/// Finite chains take the max over states, and observation-driven models use
/// their discretized kernel over grid points.
pub fn c1_sup_bound<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    s0: &[f64],
    s1: &[f64],
) -> Result<f64> {
    model.validate(theta)?;
    let th = theta.values();
    let pts = grid.points();
    let w = grid.weights();
    let f: Vec<f64> = pts
        .iter()
        .map(|&x| model.emission_density(th, x, s1, Some(s0)))
        .collect();
    if let Some(i) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDensity {
            step: 1,
            index: i,
            x: pts[i],
        });
    }
    if model.observation_driven() {
        let kernel = model.transition_kernel(th, grid, Some(s0))?;
        // Σ_i w_i p(x_j, x_i) f_i = (Kᵀ (w f))_j / w_j
        let mut g = vec![0.0; grid.len()];
        match &kernel {
            TransitionKernel::Dense { n, mix } => {
                for i in 0..*n {
                    for j in 0..*n {
                        g[j] += mix[i * n + j] * w[i] * f[i];
                    }
                }
            }
            TransitionKernel::Sparse { entries, .. } => {
                for &(to, from, c) in entries {
                    g[from] += c * w[to] * f[to];
                }
            }
        }
        return Ok(g.iter().zip(w).fold(0.0, |m, (v, wj)| m.max(v / wj)));
    }
    let integral = |x0: f64| -> f64 {
        pts.iter()
            .zip(w)
            .zip(&f)
            .map(|((&x1, wi), fi)| wi * model.transition_density(th, x0, x1) * fi)
            .sum()
    };
    if grid.is_finite_state() {
        return Ok(pts.iter().map(|&x0| integral(x0)).fold(0.0, f64::max));
    }
    let scan = grid.len().min(1001);
    let step = (grid.hi() - grid.lo()) / (scan - 1) as f64;
    let (mut best_x, mut best) = (grid.lo(), f64::NEG_INFINITY);
    for k in 0..scan {
        let x0 = grid.lo() + k as f64 * step;
        let v = integral(x0);
        if v > best {
            best = v;
            best_x = x0;
        }
    }
    let (_, refined) = golden_max(
        integral,
        (best_x - step).max(grid.lo()),
        (best_x + step).min(grid.hi()),
        80,
    );
    Ok(best.max(refined))
}

/// Weight `w(x, s) = state * |x| + obs * |s| + constant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightFn {
    pub state: f64,
    pub obs: f64,
    pub constant: f64,
}

impl Default for WeightFn {
    /// `|x| + 1`.
    fn default() -> Self {
        Self {
            state: 1.0,
            obs: 0.0,
            constant: 1.0,
        }
    }
}

impl WeightFn {
    pub fn unit() -> Self {
        Self {
            state: 0.0,
            obs: 0.0,
            constant: 1.0,
        }
    }

    pub fn eval(&self, x: f64, s: &[f64]) -> f64 {
        let sn = s.iter().fold(0.0, |m, v| m + v.abs());
        self.state * x.abs() + self.obs * sn + self.constant
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// Mean log of the per-step Lipschitz lower bounds along a simulated path.
    pub lyapunov_estimate: f64,
    /// Largest, over starting points, Monte Carlo mean of
    /// `log(g(s0, xi_1)^p w(X_p, xi_p) / w(x0, s0))`.
    pub k2_weighted_estimate: f64,
    pub k2_stderr: f64,
    /// Largest, over starting points, Monte Carlo mean of `g(s0, xi_1) w(X_1, xi_1) / w(x0, s0)`.
    pub k3_moment_estimate: f64,
    pub k3_stderr: f64,
    /// Largest `g(s0, xi_1)` seen.
    pub g_theta_sup: f64,
    pub p: usize,
    pub n_steps: usize,
    pub reps: usize,
    pub starts: usize,
    /// `k2 + 2 * stderr < 0`.
    pub pass: bool,
}

const K2_STARTS: usize = 9;
const LYAPUNOV_STEPS: usize = 200;

/// Monte Carlo check of the weighted contraction (`K2`) and moment (`K3`)
/// conditions. The sup over `(x0, s0)` runs over pairs taken at spread-out
/// quantiles of the hidden state along a simulated stationary path.
#[allow(clippy::too_many_arguments)]
pub fn check_k2_k3<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    p: usize,
    reps: usize,
    seed: u64,
    weight: WeightFn,
) -> Result<ContractionReport> {
    if p < 1 || reps < 2 {
        return Err(Error::InvalidExperiment(
            "need p >= 1 and at least two replications".into(),
        ));
    }
    model.validate(theta)?;
    let th = theta.values();
    let mut r = rng::seeded(seed);
    let path = simulate(model, theta, 2000, &mut r)?;
    let mut order: Vec<usize> = (0..path.hidden.len()).collect();
    order.sort_by(|&a, &b| path.hidden[a].total_cmp(&path.hidden[b]));
    let mut starts: Vec<usize> = (0..K2_STARTS)
        .map(|k| order[k * (order.len() - 1) / (K2_STARTS - 1)])
        .collect();
    starts.dedup_by_key(|i| path.hidden[*i].to_bits());

    let mut k2_best = (f64::NEG_INFINITY, 0.0);
    let mut k3_best = (f64::NEG_INFINITY, 0.0);
    let mut g_sup = 0.0f64;
    for &i in &starts {
        let x0 = path.hidden[i];
        let s0 = path.observations.row(i).to_vec();
        let w0 = weight.eval(x0, &s0);
        let mut k2 = Vec::with_capacity(reps);
        let mut k3 = Vec::with_capacity(reps);
        for _ in 0..reps {
            let (x1, s1) = model.sample_step(th, x0, &s0, &mut r);
            let g = c1_sup_bound(model, theta, grid, &s0, &s1)?;
            g_sup = g_sup.max(g);
            k3.push(g * weight.eval(x1, &s1) / w0);
            let (mut x, mut s) = (x1, s1);
            for _ in 1..p {
                let (nx, ns) = model.sample_step(th, x, &s, &mut r);
                x = nx;
                s = ns;
            }
            k2.push(p as f64 * g.ln() + weight.eval(x, &s).ln() - w0.ln());
        }
        let se = |v: &[f64]| stats::std_dev(v) / (v.len() as f64).sqrt();
        let (m2, m3) = (stats::mean(&k2), stats::mean(&k3));
        if m2 > k2_best.0 {
            k2_best = (m2, se(&k2));
        }
        if m3 > k3_best.0 {
            k3_best = (m3, se(&k3));
        }
    }
    let n_steps = LYAPUNOV_STEPS.min(path.observations.len() - 1);
    let lip = estimate_lipschitz(
        model,
        theta,
        grid,
        &path.observations.prefix(n_steps + 1)?,
        4,
        seed ^ 0x9e37,
    )?;
    Ok(ContractionReport {
        lyapunov_estimate: lip.lyapunov_lower,
        k2_weighted_estimate: k2_best.0,
        k2_stderr: k2_best.1,
        k3_moment_estimate: k3_best.0,
        k3_stderr: k3_best.1,
        g_theta_sup: g_sup,
        p,
        n_steps,
        reps,
        starts: starts.len(),
        pass: k2_best.0 + 2.0 * k2_best.1 < 0.0,
    })
}

/// Contraction check for the iterated map `m -> beta(Y_n) m + eta_n` driven by
/// `Y_n = alpha Y_{n-1} + eps_n` with standard normal `eps`, weight `|y| + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyK2Report {
    /// Largest Monte Carlo mean of `log(L_p w(Y_p) / w(y))` over the starting points.
    pub estimate: f64,
    pub stderr: f64,
    /// `a = 1 / (b c + 1)` with `b = (1 - |alpha|^p) / (1 - |alpha|)`, `c = E|eps|`.
    pub a: f64,
    /// `sup |beta|` must stay below `a^(1/p)` for the analytic bound.
    pub beta_threshold: f64,
    pub beta_sup: f64,
    pub pass: bool,
}

pub fn check_k2_toy(
    alpha: f64,
    beta: impl Fn(f64) -> f64,
    p: usize,
    reps: usize,
    seed: u64,
) -> Result<ToyK2Report> {
    if !(alpha.abs() < 1.0) || p < 1 || reps < 2 {
        return Err(Error::InvalidExperiment(
            "need |alpha| < 1, p >= 1 and reps >= 2".into(),
        ));
    }
    let b = (1.0 - alpha.abs().powi(p as i32)) / (1.0 - alpha.abs());
    let c = (2.0 / core::f64::consts::PI).sqrt();
    let a = 1.0 / (b * c + 1.0);
    let mut r = rng::seeded(seed);
    let starts: Vec<f64> = (0..=40).map(|k| -20.0 + k as f64).collect();
    let beta_sup = (0..=4000)
        .map(|k| beta(-20.0 + 0.01 * k as f64).abs())
        .fold(0.0, f64::max);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &y0 in &starts {
        let v: Vec<f64> = (0..reps)
            .map(|_| {
                let mut y = y0;
                let mut log_l = 0.0;
                for _ in 0..p {
                    y = alpha * y + rng::std_normal(&mut r);
                    log_l += beta(y).abs().ln();
                }
                log_l + (y.abs() + 1.0).ln() - (y0.abs() + 1.0).ln()
            })
            .collect();
        let m = stats::mean(&v);
        if m > best.0 {
            best = (m, stats::std_dev(&v) / (reps as f64).sqrt());
        }
    }
    Ok(ToyK2Report {
        estimate: best.0,
        stderr: best.1,
        a,
        beta_threshold: a.powf(1.0 / p as f64),
        beta_sup,
        pass: best.0 + 2.0 * best.1 < 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C5Report {
    pub bound: f64,
    pub mesh_points: usize,
    /// `log sup_{y,z} f(s0|y) f(s1|y,s0) / (f(s0|z) f(s1|z,s0))`.
    pub log_sup: f64,
    /// `exp(log_sup)`, or `+inf` when that overflows.
    pub sup: f64,
    pub overflow: bool,
    /// `log_sup / bound^2`.
    pub growth_exponent: f64,
}

/// Sup of the two-step emission ratio over `y, z` in `[-bound, bound]` on a
/// mesh of `mesh_points` points (states for finite chains).
pub fn c5_ratio_sup<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    bound: f64,
    s0: &[f64],
    s1: &[f64],
    mesh_points: usize,
) -> Result<C5Report> {
    if !(bound > 0.0) || mesh_points == 0 {
        return Err(Error::InvalidExperiment(
            "bound must be positive and the mesh nonempty".into(),
        ));
    }
    model.validate(theta)?;
    let th = theta.values();
    let mesh: Vec<f64> = match model.finite_states() {
        Some(k) => (0..k).map(|i| i as f64).collect(),
        None if mesh_points == 1 => vec![0.0],
        None => (0..mesh_points)
            .map(|i| -bound + 2.0 * bound * i as f64 / (mesh_points - 1) as f64)
            .collect(),
    };
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for &y in &mesh {
        let l = model.log_emission_density(th, y, s0, None)
            + model.log_emission_density(th, y, s1, Some(s0));
        if l.is_nan() {
            return Err(Error::NonFiniteDensity {
                step: 1,
                index: 0,
                x: y,
            });
        }
        hi = hi.max(l);
        lo = lo.min(l);
    }
    let log_sup = hi - lo;
    let overflow = !(log_sup < f64::MAX.ln());
    Ok(C5Report {
        bound,
        mesh_points: mesh.len(),
        log_sup,
        sup: if overflow {
            f64::INFINITY
        } else {
            log_sup.exp()
        },
        overflow,
        growth_exponent: log_sup / (bound * bound),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: Vec<f64>,
    pub n: usize,
    pub reps: usize,
}

/// `(1/n) [log p_n(xi; theta0) - log p_n(xi; theta)]` averaged over paths simulated under `theta0`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_kl<M, E>(
    model: &M,
    theta0: &ParamVector,
    theta: &ParamVector,
    grid: &StateGrid,
    n: usize,
    reps: usize,
    seed: u64,
    exec: &E,
) -> Result<KlEstimate>
where
    M: StateSpaceModel + ?Sized,
    E: Executor,
{
    if reps == 0 || n == 0 {
        return Err(Error::InvalidExperiment(
            "need at least one replication of length 1".into(),
        ));
    }
    model.validate(theta0)?;
    model.validate(theta)?;
    let samples = exec
        .map(reps, |r| -> Result<f64> {
            let mut g = rng::replication_rng(seed, r as u64);
            let obs = simulate(model, theta0, n, &mut g)?.observations;
            let l0 = log_likelihood_values(model, theta0.values(), grid, &obs)?;
            let l1 = log_likelihood_values(model, theta.values(), grid, &obs)?;
            Ok((l0 - l1) / n as f64)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let stderr = if reps > 1 {
        stats::std_dev(&samples) / (reps as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(KlEstimate {
        mean: stats::mean(&samples),
        stderr,
        samples,
        n,
        reps,
    })
}

/// Piecewise-constant density on `cells` contiguous blocks of grid points,
/// with block `k` (from the left, 1-based) carrying mass proportional to `2^-k`.
pub fn build_reference_density(grid: &StateGrid, cells: usize) -> Result<FilterState> {
    if cells < 2 || cells > grid.len() {
        return Err(Error::InvalidGrid(format!(
            "a reference density needs between 2 and {} cells, got {cells}",
            grid.len()
        )));
    }
    let n = grid.len();
    let total: f64 = (1..=cells).map(|k| 0.5f64.powi(k as i32)).sum();
    let mut values = vec![0.0; n];
    for k in 0..cells {
        let (a, b) = (k * n / cells, (k + 1) * n / cells);
        let measure: f64 = grid.weights()[a..b].iter().sum();
        let mass = 0.5f64.powi(k as i32 + 1) / total;
        values[a..b].iter_mut().for_each(|v| *v = mass / measure);
    }
    FilterState::from_density(values, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct K3Distance {
    pub mean: f64,
    pub stderr: f64,
    pub max: f64,
    pub draws: usize,
    pub all_finite: bool,
}

/// Monte Carlo `E d(P(xi_1) h, h)` over stationary pairs `(xi_0, xi_1)`, with
/// the unnormalized operator.
pub fn k3_distance<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    h: &FilterState,
    draws: usize,
    seed: u64,
) -> Result<K3Distance> {
    if draws < 2 {
        return Err(Error::InvalidExperiment("need at least two draws".into()));
    }
    let rec = FilterRecursion::new(model, theta, grid)?;
    let th = theta.values();
    let mut r = rng::seeded(seed);
    let mut d = Vec::with_capacity(draws);
    for _ in 0..draws {
        let (x0, s0) = model.sample_initial(th, &mut r);
        let (_, s1) = model.sample_step(th, x0, &s0, &mut r);
        d.push(sup_distance(
            &rec.apply_raw(&h.values, &s1, &s0)?,
            &h.values,
        )?);
    }
    Ok(K3Distance {
        mean: stats::mean(&d),
        stderr: stats::std_dev(&d) / (draws as f64).sqrt(),
        max: d.iter().cloned().fold(0.0, f64::max),
        draws,
        all_finite: d.iter().all(|v| v.is_finite()),
    })
}

/// Monte Carlo second moments `E (∂ log p(xi_0, xi_1; theta) / ∂theta_i)^2` of
/// the two-step score.
pub fn two_step_score_moment<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    grid: &StateGrid,
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if draws == 0 {
        return Err(Error::InvalidExperiment("need at least one draw".into()));
    }
    model.validate(theta)?;
    let mut r = rng::seeded(seed);
    let q = theta.len();
    let mut acc = vec![0.0; q];
    for _ in 0..draws {
        let obs = simulate(model, theta, 1, &mut r)?.observations;
        let s = crate::inference::score(model, theta, grid, &obs)?;
        for j in 0..q {
            acc[j] += s[j] * s[j] / draws as f64;
        }
    }
    Ok(acc)
}
