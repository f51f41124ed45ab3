//! `scatter`: runs the electron-impact dissociation scenarios and writes
//! figure-ready tables plus a manifest.
//!
//! Exit codes: 0 success, 1 configuration or infeasible input, 2 numerical
//! failure or non-convergence, 3 I/O.

mod config;
mod error;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;
use crate::output::Format;

#[derive(Parser, Debug)]
#[command(name = "scatter", version, about = "Coherent control of electron-impact dissociation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write its tables and manifest.
    Run(RunArgs),
    /// Check a configuration and the feasibility of its states without computing.
    Validate(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Configuration file (`key = value` lines).
    #[arg(env = "SCATTER_CONFIG")]
    config: Option<PathBuf>,

    #[arg(long)]
    scenario: Option<String>,

    /// Override a key, `--set packet.dp=0.02`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,

    #[arg(short, long)]
    output: Option<PathBuf>,

    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,

    /// Worker threads for the numerical kernels.
    #[arg(long)]
    threads: Option<usize>,
}

fn resolve(args: &CommonArgs) -> Result<Config, CliError> {
    let mut cfg = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::defaults(),
    };
    if let Some(s) = &args.scenario {
        cfg.set("scenario", s)?;
    }
    for pair in &args.overrides {
        cfg.apply_override(pair)?;
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = resolve(&args.common)?;
    if let Some(dir) = &args.output {
        cfg.set("output.dir", &dir.display().to_string())?;
    }
    if let Some(f) = &args.format {
        cfg.set("output.format", f)?;
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    cfg.check()?;
    let format = Format::parse(cfg.text("output.format"))?;
    let scenario = cfg.text("scenario").to_string();
    log::info!("running scenario {scenario}");
    let out = scenarios::run(&cfg)?;
    let dir = PathBuf::from(cfg.text("output.dir"));
    for path in output::write_outputs(&dir, format, &scenario, &cfg, &out)? {
        println!("{}", path.display());
    }
    if !out.unconverged.is_empty() {
        return Err(CliError::NotConverged(out.unconverged.join("; ")));
    }
    Ok(())
}

fn validate(args: CommonArgs) -> Result<(), CliError> {
    let cfg = resolve(&args)?;
    scenarios::preflight(&cfg)?;
    println!("OK");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("scatter: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
