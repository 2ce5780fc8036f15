use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use torus_psido_cli::commands::{self, Which};
use torus_psido_cli::config::{Format, FunctionConfig, RunConfig, SymbolConfig};
use torus_psido_cli::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "torus-psido", version, about = "Pseudo-differential operators on the discrete torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML or JSON run config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma separated subset of csv,json.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Holomorphic function as TAG:key=value,... (e.g. power:z=-0.5).
    #[arg(long = "f", global = true)]
    function: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    CheckSymbol,
    ResolventSweep,
    Funcalc,
    Traces { which: Which },
    All,
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None if matches!(cli.command, Command::All) => RunConfig::with_symbol(SymbolConfig::LaplacePlusOne),
        None => return Err(CliError::config("config", "--config is required for this command")),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(f) = &cli.format {
        cfg.output.formats = f.clone();
    }
    let flag = cli.function.as_deref().map(FunctionConfig::parse_flag).transpose()?;
    let outcome = match cli.command {
        Command::CheckSymbol => commands::check_symbol(&cfg)?,
        Command::ResolventSweep => commands::resolvent_sweep(&cfg)?,
        Command::Funcalc => commands::funcalc(&cfg, flag.as_ref())?,
        Command::Traces { which } => commands::traces(&cfg, which)?,
        Command::All => commands::all(&cfg)?,
    };
    let dir = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    for p in outcome.write(&dir, &cfg.output.formats)? {
        println!("wrote {}", p.display());
    }
    for op in &outcome.report.operations {
        println!("{:<24} {}", op.name, if op.passed { "pass" } else { "FAIL" });
        for n in &op.notes {
            println!("    {n}");
        }
    }
    Ok(outcome.report.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
