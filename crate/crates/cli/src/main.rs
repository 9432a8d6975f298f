mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use telemeander::{Error, ModelParams};

/// Laws, simulations and verification suites for the telegraph meander.
#[derive(Debug, Parser)]
#[command(name = "telemeander", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate a closed-form law on a grid.
    Law(LawArgs),
    /// Monte Carlo simulation with a summary against the closed forms.
    Simulate(SimulateArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Gaps to the Brownian meander along a Kac-scaling sweep.
    Kac(KacArgs),
}

#[derive(Debug, Clone, Args)]
struct Common {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, env = "TELEMEANDER_WORKERS")]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn params(&self) -> telemeander::Result<ModelParams> {
        ModelParams::new(self.lambda, self.c, self.t)
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum What {
    Telegraph,
    Meander,
    Cond,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum V0 {
    Plus,
    Minus,
    Symmetric,
}

#[derive(Debug, Args)]
struct LawArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = What::Meander)]
    what: What,
    /// Initial velocity (telegraph and min laws).
    #[arg(long, value_enum)]
    v0: Option<V0>,
    /// Number of switches (cond law).
    #[arg(long)]
    n: Option<u32>,
    /// `lo:hi:count`; defaults to 101 points across the support.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Free,
    Meander,
    GivenN,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = Mode::Meander)]
    mode: Mode,
    #[arg(long, value_enum)]
    v0: Option<V0>,
    #[arg(long)]
    n: Option<u32>,
    /// Reject given-N paths whose minimum is negative.
    #[arg(long)]
    conditioned: bool,
    /// Attempted paths.
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    /// Fewer accepted paths than this is treated as starvation.
    #[arg(long, default_value_t = 1)]
    min_accepted: u64,
    /// Also write accepted endpoints as CSV.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// pde, identities, moments, dominance, monte-carlo, kac or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Attempted paths for the Monte Carlo checks.
    #[arg(long, default_value_t = 1_000_000)]
    mc_paths: u64,
}

#[derive(Debug, Args)]
struct KacArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated scale parameters.
    #[arg(long, value_delimiter = ',', default_values_t = telemeander::kac::DEFAULT_ALPHAS, allow_negative_numbers = true)]
    alphas: Vec<f64>,
}

/// Exit status: 0 ok, 1 verification failure, 2 bad input, 3 Monte Carlo starvation.
#[derive(Debug)]
enum Failure {
    Verification(String),
    Input(String),
    Starvation(String),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::AcceptanceStarvation { .. } | Error::InsufficientSamples { .. } => Failure::Starvation(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Law(a) => commands::law(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Kac(a) => commands::kac(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Verification(m) => (1, m),
                Failure::Input(m) => (2, m),
                Failure::Starvation(m) => (3, m),
                Failure::Io(e) => (2, format!("i/o error: {e}")),
            };
            eprintln!("telemeander: {msg}");
            ExitCode::from(code)
        }
    }
}
