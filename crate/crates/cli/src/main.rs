use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod error;
mod manifest;

/// Construct, verify and simulate Fisher-symmetric measurements for pure states.
///
/// Exit codes: 0 success, 1 validation or verdict failure, 2 I/O or parse failure.
#[derive(Debug, Parser)]
#[command(name = "pfsic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a POVM and write it as JSON.
    Construct(ConstructArgs),
    /// Check completeness (and optionally Fisher symmetry) of a POVM file.
    Verify(VerifyArgs),
    /// Fisher analysis of a POVM file at the fiducial state.
    Fisher(FisherArgs),
    /// Monte Carlo local tomography.
    Simulate(SimulateArgs),
    /// Mix the vectors of a POVM with a real orthogonal matrix.
    Mix(MixArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    Minimal,
    TwoBasis,
    /// Random orthogonal mix of the minimal construction.
    Mix,
}

#[derive(Debug, Args, Serialize)]
struct ConstructArgs {
    #[arg(long, value_enum, required_unless_present = "descriptor")]
    kind: Option<Kind>,
    /// Hilbert-space dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Weight of the real basis for `two-basis`.
    #[arg(long, default_value_t = 0.5)]
    p_chi: f64,
    /// Seed for `--kind mix`.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of outcomes after mixing for `--kind mix`.
    #[arg(long)]
    size: Option<usize>,
    /// JSON construction descriptor, used instead of `--kind`.
    #[arg(long, conflicts_with = "kind")]
    descriptor: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    povm: PathBuf,
    /// Also require Fisher symmetry (C = 2I).
    #[arg(long)]
    pfsic: bool,
    /// Also require that no outcome is orthogonal to the fiducial state.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FisherArgs {
    povm: PathBuf,
    /// Compare against the finite-difference Fisher matrix.
    #[arg(long)]
    fd_check: bool,
    #[arg(long, default_value_t = pfsic_core::fisher::FD_STEP)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// JSON simulation config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// POVM JSON file to simulate.
    #[arg(long, conflicts_with = "kind")]
    povm: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p_chi: Option<f64>,
    /// Comma-separated local parameters x^{1,0},x^{1,1},...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params: Option<Vec<f64>>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Full JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial estimates.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct MixArgs {
    povm: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of outcomes after mixing (pads with zero vectors).
    #[arg(long)]
    size: Option<usize>,
    /// Mix with the identity.
    #[arg(long, conflicts_with = "matrix")]
    identity: bool,
    /// JSON file holding the mixing matrix as row-major nested arrays.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Allow outcomes orthogonal to the fiducial state.
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads() {
    let threads = std::env::var("PFSIC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("could not size thread pool: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Construct(a) => commands::construct(a),
        Command::Verify(a) => commands::verify(a),
        Command::Fisher(a) => commands::fisher(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Mix(a) => commands::mix(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
