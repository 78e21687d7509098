use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use turandet_cli::commands::{
    cmd_asymptotics, cmd_bounds, cmd_density, cmd_diagnose, cmd_turan, CmdError,
};
use turandet_cli::config::RunConfig;

/// Spectral pipeline for Jacobi matrices with slowly oscillating
/// coefficients: diagnostics, diagonalization, Turán/density estimates and
/// sine-law fits, driven by a flat key-value config.
#[derive(Parser)]
#[command(name = "turandet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the grid sweep.
    #[arg(long)]
    threads: Option<usize>,
    /// Comma list of output formats (overrides output.formats).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Density profile nu' = sqrt(-h) / (2 pi g) plus the periodized ladder.
    Density(Common),
    /// Sine-law fits: amplitude, phase offset, tail residuals.
    Asymptotics(Common),
    /// Slow-oscillation scores, Carleman flag, reconstruction deviation.
    Diagnose(Common),
    /// Turán-determinant traces and their limits.
    Turan(Common),
    /// Two-sided eigenvector bounds over sampled initial angles.
    Bounds(Common),
}

fn load_config(common: &Common) -> Result<(RunConfig, PathBuf), CmdError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CmdError::Config(format!("{}: {e}", common.config.display())))?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| CmdError::Config(e.to_string()))?;
    if let Some(fmt) = &common.format {
        cfg.formats = turandet_cli::config::parse_formats(fmt)
            .map_err(|e| CmdError::Config(e.to_string()))?;
    }
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    Ok((cfg, out))
}

fn dispatch(cmd: &Command) -> Result<(), CmdError> {
    let common = match cmd {
        Command::Density(c)
        | Command::Asymptotics(c)
        | Command::Diagnose(c)
        | Command::Turan(c)
        | Command::Bounds(c) => c,
    };
    let (cfg, out) = load_config(common)?;
    let run = || match cmd {
        Command::Density(_) => cmd_density(&cfg, &out).map(|_| ()),
        Command::Asymptotics(_) => cmd_asymptotics(&cfg, &out).map(|_| ()),
        Command::Diagnose(_) => cmd_diagnose(&cfg, &out).map(|_| ()),
        Command::Turan(_) => cmd_turan(&cfg, &out),
        Command::Bounds(_) => cmd_bounds(&cfg, &out),
    };
    match common.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CmdError::Internal(e.to_string()))?;
            pool.install(run)
        }
        None => run(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
