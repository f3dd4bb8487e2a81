//! Replication experiments for the score CLT, MLE normality and coverage,
//! and ergodic averages of filter functionals.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::filter::FilterState;
use crate::grid::StateGrid;
use crate::inference::{
    fisher_information_mc, fit_mle, invert_information, score, FitOptions, Matrix,
};
use crate::model::{simulate, StateSpaceModel};
use crate::operator::FilterRecursion;
use crate::params::ParamVector;
use crate::{rng, stats};

/// Replications used for the Fisher information reference.
pub const REFERENCE_REPS: usize = 10;
/// Minimum path length for the Fisher information reference.
pub const REFERENCE_MIN_LEN: usize = 1000;
/// Fits failing beyond this fraction flag the report as unreliable.
pub const UNRELIABLE_FRACTION: f64 = 0.2;
/// Standard deviation of the unconstrained start perturbation in MLE experiments.
pub const START_PERTURBATION: f64 = 0.1;

const REFERENCE_SEED_SALT: u64 = 0x5eed_f15e;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub rep: usize,
    /// Empty when the replication failed outright.
    pub values: Vec<f64>,
    pub converged: bool,
    pub std_errors: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    /// Kolmogorov distance to `N(0, reference_sd^2)`.
    pub ks_distance: f64,
    pub reference_sd: f64,
    /// Fraction of converged fits whose 95% interval covers the truth.
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub stat_name: String,
    pub reps: usize,
    pub n: usize,
    pub seed_base: u64,
    pub samples: Vec<Replicate>,
    pub components: Vec<ComponentStats>,
    pub empirical_cov: Matrix,
    pub reference_cov: Matrix,
    pub failures: usize,
    pub failure_fraction: f64,
    pub unreliable: bool,
}

/// Whether the interval of a replicate covers the truth in a component.
type CoverFn = dyn Fn(&Replicate, usize) -> bool;

impl McReport {
    /// One row per replication: `rep,converged,<component columns>`.
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("rep,converged");
        for c in &self.components {
            out.push(',');
            out.push_str(&c.name);
        }
        out.push('\n');
        for r in &self.samples {
            let _ = write!(out, "{},{}", r.rep, r.converged);
            for j in 0..self.components.len() {
                match r.values.get(j) {
                    Some(v) => {
                        let _ = write!(out, ",{v:e}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    fn build(
        stat_name: &str,
        n: usize,
        seed_base: u64,
        names: Vec<String>,
        samples: Vec<Replicate>,
        reference_cov: Matrix,
        truth_cover: Option<&CoverFn>,
    ) -> Self {
        let reps = samples.len();
        let ok: Vec<&Replicate> = samples.iter().filter(|r| r.converged).collect();
        let failures = reps - ok.len();
        let q = names.len();
        let cols: Vec<Vec<f64>> = (0..q)
            .map(|j| ok.iter().map(|r| r.values[j]).collect())
            .collect();
        let means: Vec<f64> = cols.iter().map(|c| stats::mean(c)).collect();
        let mut empirical_cov = vec![vec![0.0; q]; q];
        if ok.len() > 1 {
            for a in 0..q {
                for b in 0..q {
                    let s: f64 = cols[a]
                        .iter()
                        .zip(&cols[b])
                        .map(|(x, y)| (x - means[a]) * (y - means[b]))
                        .sum();
                    empirical_cov[a][b] = s / (ok.len() - 1) as f64;
                }
            }
        }
        let components = names
            .into_iter()
            .enumerate()
            .map(|(j, name)| {
                let reference_sd = reference_cov[j][j].sqrt();
                let coverage = truth_cover.map(|cover| {
                    let hits = ok.iter().filter(|r| cover(r, j)).count();
                    if ok.is_empty() {
                        0.0
                    } else {
                        hits as f64 / ok.len() as f64
                    }
                });
                ComponentStats {
                    name,
                    mean: means[j],
                    sd: stats::std_dev(&cols[j]),
                    skewness: stats::skewness(&cols[j]),
                    kurtosis: stats::kurtosis(&cols[j]),
                    ks_distance: if cols[j].is_empty() {
                        1.0
                    } else {
                        stats::ks_normal(&cols[j], 0.0, reference_sd)
                    },
                    reference_sd,
                    coverage,
                }
            })
            .collect();
        let failure_fraction = if reps == 0 {
            0.0
        } else {
            failures as f64 / reps as f64
        };
        Self {
            stat_name: stat_name.into(),
            reps,
            n,
            seed_base,
            samples,
            components,
            empirical_cov,
            reference_cov,
            failures,
            failure_fraction,
            unreliable: failure_fraction > UNRELIABLE_FRACTION,
        }
    }
}

fn check_reps(reps: usize, n: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::InvalidExperiment("reps must be positive".into()));
    }
    if n == 0 {
        return Err(Error::InvalidExperiment(
            "series length must be positive".into(),
        ));
    }
    Ok(())
}

/// Reference Fisher information at `theta0`, averaged over independent paths.
pub fn reference_information<M, E>(
    model: &M,
    theta0: &ParamVector,
    grid: &StateGrid,
    n: usize,
    seed: u64,
    exec: &E,
) -> Result<Matrix>
where
    M: StateSpaceModel + ?Sized,
    E: Executor,
{
    let est = fisher_information_mc(
        model,
        theta0,
        grid,
        REFERENCE_REPS,
        n.max(REFERENCE_MIN_LEN),
        seed ^ REFERENCE_SEED_SALT,
        exec,
    )?;
    Ok(est.outer_product)
}

/// Distribution of `score(theta0) / sqrt(n)` over paths of `n` transitions
/// simulated under `theta0`, against `N(0, I(theta0))`.
pub fn mc_score_clt<M, E>(
    model: &M,
    theta0: &ParamVector,
    grid: &StateGrid,
    n: usize,
    reps: usize,
    seed: u64,
    exec: &E,
) -> Result<McReport>
where
    M: StateSpaceModel + ?Sized,
    E: Executor,
{
    check_reps(reps, n)?;
    model.validate(theta0)?;
    let info = reference_information(model, theta0, grid, n, seed, exec)?;
    let samples = exec
        .map(reps, |r| -> Result<Replicate> {
            let mut g = rng::replication_rng(seed, r as u64);
            let obs = simulate(model, theta0, n, &mut g)?.observations;
            let s = score(model, theta0, grid, &obs)?;
            let root = (n as f64).sqrt();
            Ok(Replicate {
                rep: r,
                values: s.iter().map(|v| v / root).collect(),
                converged: true,
                std_errors: None,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(McReport::build(
        "score/sqrt(n)",
        n,
        seed,
        theta0.names().to_vec(),
        samples,
        info,
        None,
    ))
}

/// Distribution of `sqrt(n) (theta_hat - theta0)` against `N(0, I^-1)`, with
/// per-component coverage of the Wald 95% intervals. Each fit starts from
/// `theta0` perturbed in the unconstrained coordinates.
#[allow(clippy::too_many_arguments)]
pub fn mc_mle_normality<M, E>(
    model: &M,
    theta0: &ParamVector,
    grid: &StateGrid,
    n: usize,
    reps: usize,
    seed: u64,
    fit: &FitOptions,
    exec: &E,
) -> Result<McReport>
where
    M: StateSpaceModel + ?Sized,
    E: Executor,
{
    check_reps(reps, n)?;
    model.validate(theta0)?;
    let free: Vec<usize> = match &fit.free {
        None => (0..theta0.len()).collect(),
        Some(names) => names
            .iter()
            .map(|s| {
                theta0
                    .index_of(s)
                    .ok_or_else(|| Error::InvalidParams(format!("unknown parameter `{s}`")))
            })
            .collect::<Result<_>>()?,
    };
    let info = reference_information(model, theta0, grid, n, seed, exec)?;
    let sub: Matrix = free
        .iter()
        .map(|&a| free.iter().map(|&b| info[a][b]).collect())
        .collect();
    let reference_cov = invert_information(&sub)?;
    let root = (n as f64).sqrt();
    let samples = exec.map(reps, |r| -> Replicate {
        let mut g = rng::replication_rng(seed, r as u64);
        let failed = Replicate {
            rep: r,
            values: Vec::new(),
            converged: false,
            std_errors: None,
        };
        let Ok(path) = simulate(model, theta0, n, &mut g) else {
            return failed;
        };
        let mut u = theta0.to_unconstrained(fit.interval_map);
        for &j in &free {
            u[j] += START_PERTURBATION * rng::std_normal(&mut g);
        }
        let Ok(start) = theta0.from_unconstrained(&u, fit.interval_map) else {
            return failed;
        };
        let opts = FitOptions {
            seed: fit.seed.wrapping_add(r as u64),
            ..fit.clone()
        };
        match fit_mle(model, &start, grid, &path.observations, &opts) {
            Ok(res) => {
                let values = free
                    .iter()
                    .map(|&j| root * (res.theta_hat.values()[j] - theta0.values()[j]))
                    .collect();
                let ok_se = res.std_errors.iter().all(|v| v.is_finite());
                Replicate {
                    rep: r,
                    values,
                    converged: res.converged && ok_se,
                    std_errors: ok_se.then_some(res.std_errors),
                }
            }
            Err(_) => failed,
        }
    });
    let cover = move |rep: &Replicate, j: usize| -> bool {
        let se = rep.std_errors.as_ref().map_or(f64::NAN, |s| s[j]);
        (rep.values[j] / root).abs() <= 1.959_963_984_540_054 * se
    };
    let names = free.iter().map(|&j| theta0.names()[j].clone()).collect();
    Ok(McReport::build(
        "sqrt(n)*(theta_hat-theta0)",
        n,
        seed,
        names,
        samples,
        reference_cov,
        Some(&cover),
    ))
}

/// Running averages `(1/n) Σ_{k=1}^n g(h_k)` along one simulated path, read
/// off at each `n` in the strictly increasing `n_list`.
pub fn mc_ergodic<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta0: &ParamVector,
    grid: &StateGrid,
    n_list: &[usize],
    g: impl Fn(&FilterState) -> f64,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidExperiment(
            "n_list must be positive and strictly increasing".into(),
        ));
    }
    let n_max = *n_list.last().expect("checked nonempty");
    let mut r = rng::seeded(seed);
    let obs = simulate(model, theta0, n_max, &mut r)?.observations;
    let rec = FilterRecursion::new(model, theta0, grid)?;
    let mut out = Vec::with_capacity(n_list.len());
    let mut sum = 0.0;
    let mut next = 0;
    rec.run(&obs, |h| {
        if h.step == 0 {
            return;
        }
        sum += g(h);
        if next < n_list.len() && h.step == n_list[next] {
            out.push((h.step, sum / h.step as f64));
            next += 1;
        }
    })?;
    Ok(out)
}
