//! `propchaos`: config-driven propagation-of-chaos experiments.
//!
//! Exit codes: 0 on success, 2 for invalid configurations, failed runs or
//! a sweep with per-cell errors (the report is still written), 3 for I/O
//! failures.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{parse_config, ExperimentConfig, Format};
use run::CliError;

#[derive(Parser)]
#[command(name = "propchaos", version, about = "Propagation-of-chaos experiments for interacting particle systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the kernel once and dump the final configuration.
    Simulate(Args),
    /// Full propagation sweep along the n-ladder.
    Sweep(Args),
    /// Specific-entropy ladder on a finite alphabet.
    Entropy(Args),
    /// Compute the reference (limit) law only.
    Limit(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Overrides the configured output format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Both,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Both => Format::Both,
        }
    }
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text).map_err(CliError::Config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out_dir = o.clone();
    }
    if let Some(f) = args.format {
        cfg.format = f.into();
    }
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::Run("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Run(format!("thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = load(&args)?;
            let out = run::run_experiment(&cfg)?;
            print!("{}", out.report.summary());
            if let Some(e) = &out.entropy {
                print!("{}", run::entropy_summary(e));
            }
            print_written(&out.written);
            Ok(if out.report.has_errors() { 2 } else { 0 })
        }
        Command::Simulate(args) => {
            let cfg = load(&args)?;
            let (summary, written) = run::run_simulate(&cfg)?;
            print!("{summary}");
            print_written(&written);
            Ok(0)
        }
        Command::Entropy(args) => {
            let cfg = load(&args)?;
            let (check, written) = run::run_entropy_command(&cfg)?;
            print!("{}", run::entropy_summary(&check));
            print_written(&written);
            Ok(if check.rows.iter().any(|r| r.error.is_some()) { 2 } else { 0 })
        }
        Command::Limit(args) => {
            let cfg = load(&args)?;
            let (summary, written) = run::run_limit(&cfg)?;
            print!("{summary}");
            print_written(&written);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
