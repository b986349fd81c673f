use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lm05::experiments::{execute, Command, ExperimentConfig, OutputFormat};
use lm05::{Averaging, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_OUTPUT: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "lm05",
    version,
    about = "Two-way LM05 QKD simulator and eavesdropping analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Base seed; overrides `session.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Output directory; overrides `output.path`.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[arg(long, global = true, value_enum)]
    eve_averaging: Option<EveAveraging>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Run one session; writes transcript.csv and report.json.
    Run,
    /// One session per grid angle.
    Sweep,
    /// Randomized imperfection scatter and histogram.
    Band,
    /// Security threshold under both averaging conventions.
    Threshold,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum EveAveraging {
    Actual,
    FiftyFifty,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.session.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.path = out.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    if let Some(a) = cli.eve_averaging {
        cfg.averaging = match a {
            EveAveraging::Actual => Averaging::ActualAttack,
            EveAveraging::FiftyFifty => Averaging::FiftyFifty,
        };
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: invalid configuration: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let command = match cli.command {
        Cmd::Run => Command::Run,
        Cmd::Sweep => Command::Sweep,
        Cmd::Band => Command::Band,
        Cmd::Threshold => Command::Threshold,
    };
    match execute(command, &cfg) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e @ (Error::Output { .. } | Error::Csv(_) | Error::Json(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_OUTPUT)
        }
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
