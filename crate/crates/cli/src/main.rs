//! `ebfir`: asymptotic reports, Monte Carlo runs, condition-number tables and the a-sweep.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ebfir::Error> for CliError {
    fn from(e: ebfir::Error) -> Self {
        match e {
            ebfir::Error::InvalidConfig(_) | ebfir::Error::OutOfBox { .. } => {
                CliError::Config(e.to_string())
            }
            ebfir::Error::Io(m) => CliError::Io(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Threads {
    Auto,
    Fixed(usize),
}

fn parse_threads(s: &str) -> Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    match s.parse::<usize>() {
        Ok(k) if k > 0 => Ok(Threads::Fixed(k)),
        _ => Err(format!("expected `auto` or a positive integer, got {s:?}")),
    }
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Set a dotted config key after the file is read; repeatable.
    #[arg(long = "override", value_name = "K=V")]
    overrides: Vec<String>,
    /// Seed for every random stream; overrides the config value.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, value_name = "auto|K", default_value = "auto", value_parser = parse_threads)]
    threads: Threads,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Treat a singular A_b as a failure (exit code 3).
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Asymptotic report for one system, kernel and input filter.
    Asym(Common),
    /// Monte Carlo experiment: per-record CSV and aggregate JSON.
    Mc {
        #[command(flatten)]
        common: Common,
        /// Records per system and collection; overrides the config value.
        #[arg(long)]
        records: Option<usize>,
    },
    /// Condition numbers of Sigma and of Phi^T Phi.
    Table1(Common),
    /// Ridge quantities over an a-grid with lambda_1(Sigma) = 1.
    Sweep(Common),
}

#[derive(Debug, Parser)]
#[command(name = "ebfir", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn resolve(common: &Common, seed_key: &str, extra: Vec<String>) -> Result<Value, CliError> {
    let mut overrides = common.overrides.clone();
    overrides.extend(extra);
    let mut value = config::load_value(common.config.as_deref(), &overrides)?;
    if let Some(seed) = common.seed {
        config::set_path(&mut value, seed_key, Value::from(seed))?;
    }
    Ok(value)
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let common = match &cli.command {
        Command::Asym(c) | Command::Table1(c) | Command::Sweep(c) => c,
        Command::Mc { common, .. } => common,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Threads::Fixed(k) = common.threads {
        pool = pool.num_threads(k);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let out = common.out.clone();
    let strict = common.strict;
    pool.install(|| match &cli.command {
        Command::Asym(c) => {
            let cfg = config::typed(resolve(c, "seed", vec![])?)?;
            commands::asym(cfg, &out, strict)
        }
        Command::Mc { common, records } => {
            let extra = records.iter().map(|r| format!("records={r}")).collect();
            let cfg = config::typed(resolve(common, "master_seed", extra)?)?;
            commands::mc(cfg, &out, strict)
        }
        Command::Table1(c) => {
            commands::cmd_table1(config::typed(resolve(c, "seed", vec![])?)?, &out)
        }
        Command::Sweep(c) => commands::cmd_sweep(config::typed(resolve(c, "seed", vec![])?)?, &out),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            match outcome.numerical_failure {
                Some(msg) => {
                    eprintln!("numerical failure: {msg}");
                    ExitCode::from(3)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
