mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};

/// Anisotropic Taylor surrogates on the cube `[-1, 1]^d`.
#[derive(Parser)]
#[command(name = "aniso-taylor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan the partition and write a surrogate library.
    Build(RunArgs),
    /// Measure a library against its model and check the error bounds.
    Certify(CertifyArgs),
    /// Tabulate bounds, cell counts and measured errors over (m, eps).
    Sweep(RunArgs),
    /// Compare the rho-weighted and kappa-weighted global bounds.
    Compare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct OverrideArgs {
    /// Summability exponent, a number >= 1 or "inf".
    #[arg(long)]
    p: Option<String>,
    /// Weight exponent q.
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    /// Target accuracies, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    eps: Option<Vec<f64>>,
    /// Term counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<u64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    truncation_degree: Option<u32>,
    #[arg(long)]
    max_cells: Option<u64>,
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Library written by `build`.
    #[arg(long)]
    library: PathBuf,
    /// Optional config supplying verification settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Exit with status 1 when certification fails.
    #[arg(long)]
    strict: bool,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            p: a.p,
            q: a.q,
            eps: a.eps,
            m: a.m,
            samples_per_cell: a.samples,
            seed: a.seed,
            truncation_degree: a.truncation_degree,
            max_cells: a.max_cells,
            library: a.library,
            report: a.report,
            table: a.table,
        }
    }
}

fn resolve(args: RunArgs) -> Result<config::Resolved> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply(&args.overrides.into())?;
    cfg.resolve()
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Build(a) => commands::build(resolve(a)?)?,
        Command::Sweep(a) => commands::sweep(resolve(a)?)?,
        Command::Compare(a) => commands::compare(resolve(a)?)?,
        Command::Certify(a) => {
            let defaults = match &a.config {
                Some(path) => RunConfig::load(path)?.verification,
                None => config::Verification::default(),
            };
            let samples = a.samples.unwrap_or(defaults.samples_per_cell);
            let seed = a.seed.unwrap_or(defaults.seed);
            let passed = commands::certify_library(&a.library, samples, seed, a.report.as_deref())?;
            if a.strict && !passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
