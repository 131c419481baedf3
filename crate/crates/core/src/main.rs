use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use seamless::cli::{self, RunConfig};

/// Seamless multimodel temperature postprocessing.
#[derive(Parser)]
#[command(name = "seamless", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic observation and forecast CSVs.
    Synth(Opts),
    /// Fit every regression mode on all data and write the coefficients.
    Fit(Opts),
    /// Cross-validate and write the score tables.
    Verify(Opts),
    /// Fit, cross-validate, chart and summarise.
    Run(Opts),
    /// Re-render the charts from existing score CSVs.
    Plot(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed of the synthetic world.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated modes, e.g. persistence,reference,transition1.
    #[arg(long)]
    modes: Option<String>,
}

fn load(opts: &Opts) -> anyhow::Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.set_seed(seed)?;
    }
    if let Some(out) = &opts.out {
        cfg.out_dir = out.clone();
    }
    if let Some(modes) = &opts.modes {
        cfg.set_modes(modes)?;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    let (name, opts) = match &cli.command {
        Command::Synth(o) => ("synth", o),
        Command::Fit(o) => ("fit", o),
        Command::Verify(o) => ("verify", o),
        Command::Run(o) => ("run", o),
        Command::Plot(o) => ("plot", o),
    };
    let cfg = load(opts).context("loading configuration")?;
    let out = &mut stdout;
    match cli.command {
        Command::Synth(_) => cli::cmd_synth(&cfg, out).map(drop),
        Command::Fit(_) => cli::cmd_fit(&cfg, out).map(drop),
        Command::Verify(_) => cli::cmd_verify(&cfg, out).map(drop),
        Command::Run(_) => cli::cmd_run(&cfg, out).map(drop),
        Command::Plot(_) => cli::cmd_plot(&cfg, out),
    }
    .with_context(|| format!("{name} failed"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<seamless::Error>()
                .map(seamless::Error::exit_code)
                .unwrap_or(2);
            ExitCode::from(code as u8)
        }
    }
}
