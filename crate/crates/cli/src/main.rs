use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mosci_cli::config::{Overrides, SEED_ENV};
use mosci_cli::report::{write_documents, Render};
use mosci_cli::{cmd_ci, cmd_recommend, cmd_simulate, cmd_sweep, RunConfig};

/// Confidence intervals for Mean Opinion Scores.
#[derive(Parser)]
#[command(name = "mosci", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Intervals for each condition of a ratings CSV.
    Ci {
        ratings: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Monte-Carlo coverage / outlier / width study.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Fit the SOS parameter and recommend estimators.
    Recommend {
        ratings: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat the study for several subject counts.
    Sweep {
        /// Subject counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<u32>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Points on the rating scale.
    #[arg(long)]
    scale_k: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated estimator names (norm, stud, simci, wald, cp, wilson, jeffreys, boot).
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// binomial, low_variance or uniform.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    subjects: Option<u32>,
    #[arg(long)]
    conditions: Option<u32>,
    #[arg(long)]
    runs: Option<u32>,
    /// Master seed; falls back to MOSCI_SEED.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bootstrap_resamples: Option<usize>,
    /// json or csv.
    #[arg(long)]
    format: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with the same keys as the flags (snake_case).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(self, n_list: Option<Vec<u32>>) -> mosci_cli::Result<RunConfig> {
        let file = match &self.config {
            Some(path) => Overrides::from_toml_file(path)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            scale_k: self.scale_k,
            alpha: self.alpha,
            estimators: self.estimators,
            scenario: self.scenario,
            subjects: self.subjects,
            conditions: self.conditions,
            runs: self.runs,
            seed: self.seed,
            bootstrap_resamples: self.bootstrap_resamples,
            format: self.format,
            n_list,
            out: self.out,
        };
        RunConfig::resolve(flags.or(file), std::env::var(SEED_ENV).ok())
    }
}

fn run(cli: Cli) -> mosci_cli::Result<()> {
    let (docs, config) = match cli.command {
        Command::Ci { ratings, common } => {
            let config = common.resolve(None)?;
            (cmd_ci(&ratings, &config)?.render(config.format)?, config)
        }
        Command::Simulate { common } => {
            let config = common.resolve(None)?;
            (cmd_simulate(&config)?.render(config.format)?, config)
        }
        Command::Recommend { ratings, common } => {
            let config = common.resolve(None)?;
            (cmd_recommend(&ratings, &config)?.render(config.format)?, config)
        }
        Command::Sweep { n_list, common } => {
            let config = common.resolve((!n_list.is_empty()).then_some(n_list))?;
            (cmd_sweep(&config)?.render(config.format)?, config)
        }
    };
    if config.out.is_none() && docs.iter().any(|d| d.suffix.is_some()) {
        eprintln!("note: companion files are only written with --out");
    }
    write_documents(&docs, config.out.as_deref())?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mosci: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
