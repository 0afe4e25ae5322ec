//! `clockvmc`: diagnostics, training, tuning and evolution runs for
//! clock-Hamiltonian variational Monte Carlo.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use clockvmc::models::ModelKind;

use crate::commands::train::Mode;
use crate::commands::Context;
use crate::config::{RunConfig, SamplerKind};
use crate::error::{CliError, Result};

/// Environment variable overriding the configured master seed.
const SEED_ENV: &str = "CLOCKVMC_SEED";

#[derive(Debug, Parser)]
#[command(name = "clockvmc", version, about = "Variational Monte Carlo on Feynman-Kitaev clock Hamiltonians")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; takes precedence over CLOCKVMC_SEED and the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Full budget: 300 iterations per stage, 100 tuner trials.
    #[arg(long, global = true)]
    paper_scale: bool,

    /// Record wall-clock times in traces (makes outputs run-dependent).
    #[arg(long, global = true)]
    wallclock: bool,

    /// Override the number of physical spins.
    #[arg(long, global = true)]
    n_s: Option<usize>,

    /// Override the number of clock spins (`2^n_t − 1` steps). For `tune`
    /// this restricts the sweep to one clock size.
    #[arg(long, global = true)]
    n_t: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact ground-state diagnostics over the configured (N_S, N_T) grid.
    Diagnose,
    /// Train one model; writes trace, checkpoint, summary and magnetization.
    Train {
        /// rbm, mp-rbm, ar or ar-split (overrides `model.kind`)
        #[arg(long, value_parser = parse_kind)]
        ansatz: Option<ModelKind>,
        #[arg(long, value_enum, default_value_t = Mode::Energy)]
        mode: Mode,
    },
    /// Hyper-parameter studies over clock sizes; resumes existing ledgers.
    Tune {
        /// rbm, mp-rbm, ar or ar-split (overrides `model.kind`)
        #[arg(long, value_parser = parse_kind)]
        ansatz: Option<ModelKind>,
        #[arg(long, value_enum)]
        sampler: Option<SamplerKind>,
    },
    /// Per-time magnetization from a checkpoint, or exact only with --exact.
    Evolve {
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Merge the artifacts under the output directory into report.json.
    Report,
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|_| format!("expected one of rbm, mp-rbm, ar, ar-split; got `{s}`"))
}

fn resolve_seed(flag: Option<u64>, env: Option<String>, config: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| CliError::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        None => Ok(config),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if cli.paper_scale {
        config.apply_paper_scale();
    }
    config.seed = resolve_seed(cli.seed, std::env::var(SEED_ENV).ok(), config.seed)?;
    if let Some(n) = cli.n_s {
        config.problem.n_s = n;
    }
    if let Some(n) = cli.n_t {
        config.problem.n_t = n;
        config.problem.n_steps = None;
        config.tune.n_t_values = vec![n];
    }
    match &cli.command {
        Command::Train { ansatz: Some(k), .. } | Command::Tune { ansatz: Some(k), .. } => config.model.kind = *k,
        _ => {}
    }
    if let Command::Tune { sampler: Some(s), .. } = cli.command {
        config.tune.sampler = s;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context::new(config, out, cli.wallclock);
    match cli.command {
        Command::Diagnose => commands::diagnose::run(&ctx),
        Command::Train { mode, .. } => commands::train::run(&ctx, mode),
        Command::Tune { .. } => commands::tune::run(&ctx),
        Command::Evolve { exact, checkpoint } => commands::evolve::run(&ctx, exact, checkpoint),
        Command::Report => commands::report::run(&ctx),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
