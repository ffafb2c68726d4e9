//! Command-line front end: a TOML run configuration, command-line
//! overrides, and one pipeline per subcommand.
//!
//! Precedence for every setting is flag, then config file, then built-in
//! default. `--jobs` falls back to `LATENT_BOUNDS_JOBS`.

pub mod commands;
pub mod config;
pub mod report;

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use config::{RunConfig, TauSetting};

#[derive(Debug, Parser)]
#[command(name = "latent-bounds", version, about = "Sharp bounds, sensitivity and inference for latent choice-set models")]
#[command(after_help = "Flags override config fields, which override built-in defaults.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimated identified sets per parameter and specification.
    Bounds,
    /// Bounds when some assumptions hold for a share lambda of the population.
    Sensitivity {
        /// Comma-separated lambda values; replaces `sensitivity.lambdas`.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Bootstrap confidence intervals for linear parameters.
    Infer,
    /// Bootstrap specification tests.
    Spectest,
    /// Draw a synthetic clustered sample from a random model.
    Simulate,
    /// Quantile-discretize the input outcomes.
    Discretize,
}

#[derive(Debug, Default, Args)]
pub struct Options {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// CSV with header `cluster_id,y,d,z`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Directory receiving `<command>.json` and `<command>.txt`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of discretization bins.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Bootstrap draws.
    #[arg(long, global = true)]
    pub bootstrap: Option<usize>,
    /// Points in the test-inversion grid.
    #[arg(long, global = true)]
    pub theta_grid: Option<usize>,
    /// `auto` or a starting value in (0,1).
    #[arg(long, global = true)]
    pub tau: Option<String>,
    /// Worker threads.
    #[arg(long, global = true, env = "LATENT_BOUNDS_JOBS")]
    pub jobs: Option<usize>,
    /// Print JSON instead of the text table on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

impl Options {
    /// Loads the config (or the defaults) and applies the flags on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        if let Some(p) = &self.out {
            cfg.output = Some(p.clone());
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.bins.is_some() {
            cfg.bins = self.bins;
        }
        if self.alpha.is_some() || self.bootstrap.is_some() || self.theta_grid.is_some() || self.tau.is_some() {
            let inf = cfg.inference.get_or_insert_with(Default::default);
            inf.alpha = self.alpha.or(inf.alpha);
            inf.bootstrap = self.bootstrap.or(inf.bootstrap);
            inf.theta_grid = self.theta_grid.or(inf.theta_grid);
            if let Some(t) = &self.tau {
                inf.tau = Some(TauSetting::parse(t)?);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: &Cli) -> Result<u8> {
    if let Some(jobs) = cli.options.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let mut cfg = cli.options.resolve()?;
    let out = cfg.output.clone();
    let json = cli.options.json;
    match &cli.command {
        Command::Bounds => finish(commands::run_bounds(&cfg)?, out, json),
        Command::Sensitivity { lambdas } => {
            if let (Some(l), Some(s)) = (lambdas, cfg.sensitivity.as_mut()) {
                s.lambdas = l.clone();
                cfg.validate()?;
            }
            finish(commands::run_sensitivity(&cfg)?, out, json)
        }
        Command::Infer => finish(commands::run_inference(&cfg)?, out, json),
        Command::Spectest => finish(commands::run_spectest(&cfg)?, out, json),
        Command::Simulate => {
            let (report, csv) = commands::run_simulate(&cfg)?;
            with_csv(report, csv, "sample.csv", out, json)
        }
        Command::Discretize => {
            let (report, csv) = commands::run_discretize(&cfg)?;
            with_csv(report, csv, "discretized.csv", out, json)
        }
    }
}

fn finish<T: serde::Serialize>(report: report::Report<T>, out: Option<PathBuf>, json: bool) -> Result<u8> {
    report.emit(out.as_deref(), json)?;
    Ok(report.exit_code)
}

/// With `--out` the CSV lands next to the report; without it the CSV is
/// the only thing written to stdout.
fn with_csv<T: serde::Serialize>(
    report: report::Report<T>,
    csv: String,
    file: &str,
    out: Option<PathBuf>,
    json: bool,
) -> Result<u8> {
    match out {
        Some(dir) => {
            report.emit(Some(&dir), json)?;
            std::fs::write(dir.join(file), csv)?;
        }
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(report.exit_code)
}
