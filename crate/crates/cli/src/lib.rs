//! Command-line front end for the big-jump risk engine.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::acceptance::{Suite, CRITERIA};
use crate::config::{ExperimentConfig, Overrides};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "bigjump", version, about = "Tail and ruin asymptotics of perpetuities with heavy-tailed claims")]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo paths.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "BIGJUMP_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical tail of the discounted aggregate claims against the series and closed form.
    Tail,
    /// Ruin probabilities with premium income.
    Ruin,
    /// Index estimates and class diagnostics for a tail law or a sample file.
    Index,
    /// Run the reference validation suite.
    Validate {
        /// List the criteria and exit.
        #[arg(long)]
        list: bool,
        /// Run only these criteria (comma-separated ids).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        /// Multiply every tolerance band by this factor.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// Rare-set directions, validation and the limit measure of the set.
    Geometry,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, samples: self.samples, workers: self.workers, out: self.out.clone() }
    }

    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let path = self.config.as_ref().ok_or_else(|| CliError::schema("--config", "a configuration file is required"))?;
        let mut cfg = ExperimentConfig::load(path)?;
        cfg.apply(&self.overrides())?;
        Ok(cfg)
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bigjump: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let outcome = match &cli.command {
        Command::Validate { list, only, tolerance_scale } => return validate(cli, *list, only, *tolerance_scale),
        Command::Tail => commands::run_tail(&cli.load()?)?,
        Command::Ruin => commands::run_ruin(&cli.load()?)?,
        Command::Index => commands::run_index(&cli.load()?)?,
        Command::Geometry => commands::run_geometry(&cli.load()?)?,
    };
    println!("{}", outcome.summary);
    println!("wrote {} ({} files)", outcome.dir.display(), outcome.manifest.files.len() + 1);
    Ok(0)
}

fn validate(cli: &Cli, list: bool, only: &[u32], scale: f64) -> Result<i32, CliError> {
    if list {
        for c in &CRITERIA {
            println!("{:>2} {:<34} budget {:>5}s", c.id, c.name, c.budget.as_secs());
        }
        return Ok(0);
    }
    if let Some(bad) = only.iter().find(|id| !CRITERIA.iter().any(|c| c.id == **id)) {
        return Err(CliError::schema("--only", &format!("no criterion {bad}")));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CliError::schema("--tolerance-scale", "must be positive"));
    }
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::schema("--workers", "must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Failure(e.to_string()))?;
    let suite = Suite::new(cli.seed.unwrap_or_else(Suite::default_seed), scale);
    let results = pool.install(|| suite.run_all(only, |r| println!("{}", r.line())));
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if let Some(dir) = &cli.out {
        let mut out = output::OutputDir::create(dir)?;
        out.write_json("validation.json", &results)?;
    }
    Ok(if failed == 0 { 0 } else { 1 })
}
