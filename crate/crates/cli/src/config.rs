//! Run configuration files and model construction.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use ssm_mirfs::diagnostics::WeightFn;
use ssm_mirfs::inference::FitOptions;
use ssm_mirfs::models::{
    garch_state_space, ArArch, ArArchSpec, GarchSpec, LinGaussSpec, MsAr, MsArSpec, SvSpec,
};
use ssm_mirfs::{make_trapezoid_grid, ObservationSeq, ParamVector, StateGrid, StateSpaceModel};

pub const FAMILIES: [&str; 5] = ["msar", "lingauss", "ararch", "garch11", "sv"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnose: Option<DiagnoseOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: String,
    pub spec: Value,
    /// Variance floor for `msar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_floor: Option<f64>,
}

/// `"auto"` or an explicit trapezoid grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Named(String),
    Explicit { lo: f64, hi: f64, points: usize },
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::Named("auto".into())
    }
}

/// A CSV path (relative to the config file) or a simulation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    Path(String),
    Simulate { simulate: SimulateSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    /// Number of observation rows.
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseOptions {
    pub p: usize,
    pub reps: usize,
    pub pairs: usize,
    pub bounds: Vec<f64>,
    pub mesh_points: usize,
    pub score_draws: usize,
    pub weight: WeightFn,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            p: 1,
            reps: 200,
            pairs: 8,
            bounds: vec![2.0, 4.0, 8.0],
            mesh_points: 401,
            score_draws: 100,
            weight: WeightFn::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    #[default]
    Score,
    Mle,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McOptions {
    pub experiment: Experiment,
}

/// A config file together with the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base })
    }

    pub fn data_path(&self, rel: &str) -> PathBuf {
        self.base.join(rel)
    }
}

/// A constructed model and its true parameter vector.
pub enum Built {
    Grid {
        model: Box<dyn StateSpaceModel>,
        theta: ParamVector,
    },
    /// GARCH orders above (1,1) can only be simulated.
    GarchHigh(GarchSpec),
}

impl Built {
    pub fn grid_model(&self) -> Result<(&dyn StateSpaceModel, &ParamVector)> {
        match self {
            Built::Grid { model, theta } => Ok((model.as_ref(), theta)),
            Built::GarchHigh(spec) => Err(ssm_mirfs::Error::Unsupported(format!(
                "GARCH({},{}) is simulate-only",
                spec.alphas.len(),
                spec.betas.len()
            ))
            .into()),
        }
    }
}

fn spec_of<T: serde::de::DeserializeOwned>(family: &str, v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).with_context(|| format!("invalid {family} spec"))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !FAMILIES.contains(&self.model.family.as_str()) {
            bail!(
                "unknown model family `{}`; expected one of: {}\n\nusage: ssm-mirfs <COMMAND> --config <FILE> (see --help)",
                self.model.family,
                FAMILIES.join(", ")
            );
        }
        if let GridConfig::Named(n) = &self.grid {
            if n != "auto" {
                bail!("grid must be \"auto\" or {{\"lo\", \"hi\", \"points\"}}, got \"{n}\"");
            }
        }
        if self.model.sigma2_floor.is_some() && self.model.family != "msar" {
            bail!("sigma2_floor only applies to msar");
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Built> {
        let fam = self.model.family.as_str();
        let spec = &self.model.spec;
        let (model, theta): (Box<dyn StateSpaceModel>, ParamVector) = match fam {
            "msar" => {
                let s: MsArSpec = spec_of(fam, spec)?;
                let m = MsAr {
                    sigma2_floor: self
                        .model
                        .sigma2_floor
                        .unwrap_or(MsAr::default().sigma2_floor),
                };
                let theta = s.params()?;
                m.validate(&theta)?;
                (Box::new(m), theta)
            }
            "lingauss" => {
                let s: LinGaussSpec = spec_of(fam, spec)?;
                (Box::new(s.model()), s.params()?)
            }
            "ararch" => {
                let s: ArArchSpec = spec_of(fam, spec)?;
                (Box::new(ArArch), s.params()?)
            }
            "garch11" => {
                let s: GarchSpec = spec_of(fam, spec)?;
                s.validate()?;
                if s.alphas.len() != 1 || s.betas.len() != 1 {
                    return Ok(Built::GarchHigh(s));
                }
                (Box::new(garch_state_space(&s)?), s.params()?)
            }
            "sv" => {
                let s: SvSpec = spec_of(fam, spec)?;
                (Box::new(s.model()), s.params()?)
            }
            other => return Err(anyhow!("unknown model family `{other}`")),
        };
        Ok(Built::Grid { model, theta })
    }

    pub fn grid(
        &self,
        model: &dyn StateSpaceModel,
        theta: &ParamVector,
        obs: Option<&ObservationSeq>,
    ) -> Result<StateGrid> {
        Ok(match (&self.grid, obs) {
            (GridConfig::Explicit { lo, hi, points }, _) => make_trapezoid_grid(*lo, *hi, *points)?,
            (GridConfig::Named(_), Some(obs)) => model.grid_for_data(theta.values(), obs)?,
            (GridConfig::Named(_), None) => model.default_grid(theta.values())?,
        })
    }
}

/// Parses `--theta`: inline JSON when it starts with `{`, otherwise a file path.
pub fn parse_theta(arg: &str, template: &ParamVector) -> Result<ParamVector> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading theta file {arg}"))?
    };
    let pv: ParamVector = serde_json::from_str(&text).context("parsing theta")?;
    Ok(template.assign(&pv)?)
}
