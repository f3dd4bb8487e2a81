use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use ssm_mirfs::diagnostics::{
    c1_sup_bound, c5_ratio_sup, check_k2_k3, estimate_lipschitz, two_step_score_moment, C5Report,
    ContractionReport, LipschitzReport,
};
use ssm_mirfs::inference::{fit_mle, FitResult};
use ssm_mirfs::mclab::{mc_mle_normality, mc_score_clt, McReport};
use ssm_mirfs::models::simulate_garch;
use ssm_mirfs::{
    log_likelihood, rng, simulate, LogLikBreakdown, ObservationSeq, ParamVector, SimulatedPath,
};

use crate::config::{Built, DataSource, Experiment, Loaded, RunConfig};
use crate::io;
use crate::pool::Pool;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Envelope around every emitted result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: RunConfig,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    fn new(command: &str, seed: Option<u64>, config: &RunConfig, result: T) -> Self {
        Self {
            command: command.into(),
            version: VERSION.into(),
            seed,
            config: config.clone(),
            result,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn draw(built: &Built, rows: usize, seed: u64) -> Result<SimulatedPath> {
    if rows < 2 {
        bail!("--n must be at least 2 rows, got {rows}");
    }
    let mut r = rng::seeded(seed);
    Ok(match built {
        Built::GarchHigh(spec) => simulate_garch(spec, rows - 1, &mut r)?,
        Built::Grid { model, theta } => simulate(model.as_ref(), theta, rows - 1, &mut r)?,
    })
}

/// Observations named by the config, with the seed used when they were simulated.
fn observations(loaded: &Loaded, built: &Built) -> Result<(ObservationSeq, Option<u64>)> {
    match &loaded.config.data {
        None => bail!("the config has no `data` entry"),
        Some(DataSource::Path(p)) => Ok((io::read_observations(&loaded.data_path(p))?, None)),
        Some(DataSource::Simulate { simulate }) => Ok((
            draw(built, simulate.n, simulate.seed)?.observations,
            Some(simulate.seed),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub rows: usize,
    pub dim: usize,
    pub out: PathBuf,
    pub hidden: PathBuf,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

fn summarize(obs: &ObservationSeq) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = obs.len() as f64;
    let d = obs.dim();
    let (mut mean, mut var) = (vec![0.0; d], vec![0.0; d]);
    let (mut min, mut max) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    for row in obs.rows() {
        for j in 0..d {
            mean[j] += row[j] / n;
            min[j] = min[j].min(row[j]);
            max[j] = max[j].max(row[j]);
        }
    }
    for row in obs.rows() {
        for j in 0..d {
            var[j] += (row[j] - mean[j]).powi(2) / (n - 1.0);
        }
    }
    (mean, var, min, max)
}

pub fn default_hidden_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.hidden.csv"))
}

pub fn simulate_cmd(
    loaded: &Loaded,
    rows: usize,
    seed: u64,
    out: &Path,
    hidden: Option<&Path>,
) -> Result<String> {
    let built = loaded.config.build()?;
    let path = draw(&built, rows, seed)?;
    let hidden = hidden
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_hidden_path(out));
    io::write_observations(out, &path.observations)?;
    io::write_hidden(&hidden, &path.hidden)?;
    let (mean, variance, min, max) = summarize(&path.observations);
    let summary = SimulateSummary {
        rows: path.observations.len(),
        dim: path.observations.dim(),
        out: out.to_path_buf(),
        hidden,
        mean,
        variance,
        min,
        max,
    };
    Report::new("simulate", Some(seed), &loaded.config, summary).to_json()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoglikResult {
    pub theta: ParamVector,
    pub grid_points: usize,
    pub loglik: LogLikBreakdown,
}

fn resolve_theta(template: &ParamVector, theta: Option<&str>) -> Result<ParamVector> {
    match theta {
        Some(arg) => crate::config::parse_theta(arg, template),
        None => Ok(template.clone()),
    }
}

pub fn loglik_cmd(loaded: &Loaded, theta: Option<&str>) -> Result<String> {
    let built = loaded.config.build()?;
    let (model, theta0) = built.grid_model()?;
    let theta = resolve_theta(theta0, theta)?;
    let (obs, seed) = observations(loaded, &built)?;
    let grid = loaded.config.grid(model, &theta, Some(&obs))?;
    let ll = log_likelihood(model, &theta, &grid, &obs)?;
    let res = LoglikResult {
        theta,
        grid_points: grid.len(),
        loglik: ll,
    };
    Report::new("loglik", seed, &loaded.config, res).to_json()
}

/// Command-line overrides of the config's fit options.
#[derive(Debug, Clone, Default)]
pub struct FitOverrides {
    pub tol_grad: Option<f64>,
    pub max_iter: Option<usize>,
    pub fd_step: Option<f64>,
    pub seed: Option<u64>,
}

pub fn fit_cmd(loaded: &Loaded, theta: Option<&str>, ov: &FitOverrides) -> Result<String> {
    let built = loaded.config.build()?;
    let (model, theta0) = built.grid_model()?;
    let start = resolve_theta(theta0, theta)?;
    let (obs, _) = observations(loaded, &built)?;
    let grid = loaded.config.grid(model, &start, Some(&obs))?;
    let mut opts = loaded.config.fit.clone().unwrap_or_default();
    if let Some(v) = ov.tol_grad {
        opts.tol_grad = v;
    }
    if let Some(v) = ov.max_iter {
        opts.max_iter = v;
    }
    if ov.fd_step.is_some() {
        opts.fd_step = ov.fd_step;
    }
    if let Some(v) = ov.seed {
        opts.seed = v;
    }
    let res: FitResult = fit_mle(model, &start, &grid, &obs, &opts)?;
    Report::new("fit", Some(opts.seed), &loaded.config, res).to_json()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseResult {
    pub grid_points: usize,
    pub contraction: ContractionReport,
    pub lipschitz: LipschitzReport,
    /// One-step sup bound per step, aligned with `lipschitz.lower`.
    pub c1: Vec<f64>,
    pub c5: Vec<C5Report>,
    pub two_step_score_moment: Vec<f64>,
}

/// Rows simulated for `diagnose` when the config carries no data.
pub const DIAGNOSE_ROWS: usize = 50;

pub fn diagnose_cmd(loaded: &Loaded, theta: Option<&str>, seed: u64) -> Result<String> {
    let built = loaded.config.build()?;
    let (model, theta0) = built.grid_model()?;
    let theta = resolve_theta(theta0, theta)?;
    let opts = loaded.config.diagnose.clone().unwrap_or_default();
    let obs = match &loaded.config.data {
        Some(_) => observations(loaded, &built)?.0,
        None => simulate(model, &theta, DIAGNOSE_ROWS - 1, &mut rng::seeded(seed))?.observations,
    };
    if obs.len() < 2 {
        bail!("diagnose needs at least two observations");
    }
    let obs = obs.prefix(obs.len().min(DIAGNOSE_ROWS))?;
    let grid = loaded.config.grid(model, &theta, Some(&obs))?;
    let contraction = check_k2_k3(model, &theta, &grid, opts.p, opts.reps, seed, opts.weight)?;
    let lipschitz = estimate_lipschitz(model, &theta, &grid, &obs, opts.pairs, seed)?;
    let c1 = (1..obs.len())
        .map(|k| c1_sup_bound(model, &theta, &grid, obs.row(k - 1), obs.row(k)))
        .collect::<Result<Vec<_>, _>>()?;
    let c5 = opts
        .bounds
        .iter()
        .map(|&b| c5_ratio_sup(model, &theta, b, obs.row(0), obs.row(1), opts.mesh_points))
        .collect::<Result<Vec<_>, _>>()?;
    let moments = two_step_score_moment(model, &theta, &grid, opts.score_draws, seed)?;
    let res = DiagnoseResult {
        grid_points: grid.len(),
        contraction,
        lipschitz,
        c1,
        c5,
        two_step_score_moment: moments,
    };
    Report::new("diagnose", Some(seed), &loaded.config, res).to_json()
}

pub fn mc_cmd(
    loaded: &Loaded,
    theta: Option<&str>,
    experiment: Option<Experiment>,
    n: usize,
    reps: usize,
    seed: u64,
    pool: &Pool,
) -> Result<(String, McReport)> {
    let built = loaded.config.build()?;
    let (model, theta0) = built.grid_model()?;
    let theta = resolve_theta(theta0, theta)?;
    let grid = loaded.config.grid(model, &theta, None)?;
    let experiment = experiment
        .or(loaded.config.mc.as_ref().map(|m| m.experiment))
        .unwrap_or_default();
    let rep = match experiment {
        Experiment::Score => mc_score_clt(model, &theta, &grid, n, reps, seed, pool)?,
        Experiment::Mle => {
            let opts = loaded.config.fit.clone().unwrap_or_default();
            mc_mle_normality(model, &theta, &grid, n, reps, seed, &opts, pool)?
        }
    };
    let json = Report::new("mc", Some(seed), &loaded.config, rep.clone())
        .to_json()
        .context("serializing report")?;
    Ok((json, rep))
}
