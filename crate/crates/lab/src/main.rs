use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use minrays_lab::config::{ExperimentConfig, ExperimentKind, Level};
use minrays_lab::record::{config_hash, Cache};
use minrays_lab::{run, run_uncached, LabError, ResultRecord};

#[derive(Debug, Parser)]
#[command(
    name = "minrays",
    version,
    about = "Minimal rays on a genus-2 surface: experiments and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config; the built-in config is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts and the result cache.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; required unless the config file sets one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for grid and ray evaluations.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    level: Option<Level>,
    /// Recompute even when a cached record exists.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Print the effective config and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Octagon group certificate and field invariance.
    Group,
    /// Minimal segment between two points.
    Geodesic,
    /// Truncated minimal ray and its endpoint.
    Ray,
    /// Morse deviations of minimal geodesics over radii.
    Morse,
    /// Horofunction on a polar grid.
    Horofunction,
    /// Width estimates of rays to one direction.
    Widths,
    /// Shortest closed geodesic of a word and rays toward its axis.
    Periodic,
    /// The acceptance suite.
    Verify,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Self::Group => ExperimentKind::Group,
            Self::Geodesic => ExperimentKind::Geodesic,
            Self::Ray => ExperimentKind::Ray,
            Self::Morse => ExperimentKind::Morse,
            Self::Horofunction => ExperimentKind::Horofunction,
            Self::Widths => ExperimentKind::Widths,
            Self::Periodic => ExperimentKind::Periodic,
            Self::Verify => ExperimentKind::Verify,
        }
    }
}

fn effective_config(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let kind = cli.command.kind();
    let mut config = match &cli.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if c.experiment != kind {
                return Err(LabError::Config(format!(
                    "{} is a {:?} config, not {kind:?}",
                    path.display(),
                    c.experiment
                )));
            }
            c
        }
        None => {
            let seed = cli.seed.ok_or_else(|| {
                LabError::Config("a seed is required: pass --seed or use a config file".into())
            })?;
            ExperimentConfig::builtin(kind, seed)
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(level) = cli.level {
        config.level = level;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: &Cli) -> Result<Option<ResultRecord>, LabError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LabError::Config(format!("--threads: {e}")))?;
    }
    let config = effective_config(cli)?;
    if cli.print_config {
        print!("{}", config.to_toml());
        return Ok(None);
    }
    let record = if cli.no_cache {
        run_uncached(&config)?
    } else {
        let hash = config_hash(&config);
        if Cache::new(&config.output.dir).load(&hash)?.is_some() {
            eprintln!("cache hit {}", &hash[..16]);
        }
        run(&config)?
    };
    Ok(Some(record))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(record)) => {
            print!("{}", record.to_text());
            for a in &record.assertions {
                eprintln!(
                    "[{}] {}: {}",
                    if a.pass { "PASS" } else { "FAIL" },
                    a.name,
                    a.detail
                );
            }
            let failed: Vec<&str> = record.failures().map(|a| a.name.as_str()).collect();
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("failed: {}", failed.join(", "));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
