use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use ssm_mirfs_cli::commands::{self, FitOverrides};
use ssm_mirfs_cli::config::{Experiment, Loaded};
use ssm_mirfs_cli::pool::Pool;
use ssm_mirfs_cli::{exit_code, io};

#[derive(Parser)]
#[command(
    name = "ssm-mirfs",
    version,
    about = "Grid likelihoods, fitting and diagnostics for state space models"
)]
struct Cli {
    /// Worker threads for Monte Carlo replications; defaults to all cores.
    #[arg(long, global = true, env = "SSM_MIRFS_WORKERS")]
    workers: Option<usize>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate observations and the hidden path to CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Number of observation rows.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Hidden path CSV; defaults to `<out stem>.hidden.csv`.
        #[arg(long)]
        hidden: Option<PathBuf>,
    },
    /// Log likelihood of the config's data.
    Loglik {
        #[arg(long)]
        config: PathBuf,
        /// Parameter JSON object, inline or as a file path.
        #[arg(long)]
        theta: Option<String>,
    },
    /// Maximum likelihood fit starting from the config's parameters.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        tol_grad: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        fd_step: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Contraction, Lipschitz and moment diagnostics.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo check of the score CLT or MLE normality.
    Mc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, value_enum)]
        experiment: Option<ExperimentArg>,
        #[arg(long)]
        reps: usize,
        /// Transitions per replication.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Also write the per-replication samples as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ExperimentArg {
    Score,
    Mle,
}

fn run(cli: Cli) -> Result<()> {
    let json = match &cli.command {
        Command::Simulate {
            config,
            n,
            seed,
            out,
            hidden,
        } => commands::simulate_cmd(
            &Loaded::from_file(config)?,
            *n,
            *seed,
            out,
            hidden.as_deref(),
        )?,
        Command::Loglik { config, theta } => {
            commands::loglik_cmd(&Loaded::from_file(config)?, theta.as_deref())?
        }
        Command::Fit {
            config,
            theta,
            tol_grad,
            max_iter,
            fd_step,
            seed,
        } => {
            let ov = FitOverrides {
                tol_grad: *tol_grad,
                max_iter: *max_iter,
                fd_step: *fd_step,
                seed: *seed,
            };
            commands::fit_cmd(&Loaded::from_file(config)?, theta.as_deref(), &ov)?
        }
        Command::Diagnose {
            config,
            theta,
            seed,
        } => commands::diagnose_cmd(&Loaded::from_file(config)?, theta.as_deref(), *seed)?,
        Command::Mc {
            config,
            theta,
            experiment,
            reps,
            n,
            seed,
            csv,
        } => {
            let loaded = Loaded::from_file(config)?;
            let pool = Pool::new(cli.workers)?;
            let exp = experiment.map(|e| match e {
                ExperimentArg::Score => Experiment::Score,
                ExperimentArg::Mle => Experiment::Mle,
            });
            let (json, rep) =
                commands::mc_cmd(&loaded, theta.as_deref(), exp, *n, *reps, *seed, &pool)?;
            if let Some(path) = csv {
                io::write_text(path, &rep.samples_csv())?;
            }
            json
        }
    };
    match &cli.output {
        Some(path) => io::write_text(path, &(json + "\n")),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
