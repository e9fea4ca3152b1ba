use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spectral_gate::error::Error;
use spectral_gate::run::{run_config, Command, RunOverrides};

/// Certified exclusion regions for the generalized spectrum of physical
/// operator pencils on periodic cells.
#[derive(Parser)]
#[command(name = "spectral-gate", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file (JSON, schema_version 1).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify the key orthogonality identities for the catalog presets.
    IdentityCheck(CommonArgs),
    /// Solve one instance for a random source and export the solution.
    Solve(CommonArgs),
    /// Search for a coercivity certificate of one instance.
    Certify(CommonArgs),
    /// Scan a complex parameter plane and export the certified region map.
    SpectrumMap(CommonArgs),
    /// Scan a Brillouin-zone path against a frequency list.
    BlochScan(CommonArgs),
    /// Check analytic properties of the Green's operator.
    Properties(CommonArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SPECTRAL_GATE_LOG")).init();
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::IdentityCheck(a) => (Command::IdentityCheck, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Certify(a) => (Command::Certify, a),
        Cmd::SpectrumMap(a) => (Command::SpectrumMap, a),
        Cmd::BlochScan(a) => (Command::BlochScan, a),
        Cmd::Properties(a) => (Command::Properties, a),
    };
    if let Some(workers) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: cannot configure {workers} workers: {e}");
            return ExitCode::from(1);
        }
    }
    let overrides = RunOverrides {
        output_dir: args.out.clone(),
        seed: args.seed,
    };
    match run_config(command, &args.config, &overrides) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            // machine-parsable error record on stderr
            eprintln!(
                "{}",
                serde_json::json!({ "error": err.to_string(), "kind": error_kind(&err) })
            );
            match err {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::DimensionMismatch(_) => "dimension-mismatch",
        Error::Symbol(_) => "symbol",
        Error::InvalidArgument(_) => "invalid-argument",
        Error::Certificate(_) => "certificate",
        Error::UnverifiedTranslation(_) => "unverified-translation",
        Error::GeneralizedSpectrumHit { .. } => "generalized-spectrum-hit",
        Error::PointwiseSingular { .. } => "pointwise-singular",
        Error::OracleCapExceeded { .. } => "oracle-cap-exceeded",
        Error::SoundnessViolation(_) => "soundness-violation",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Format(_) => "format",
    }
}
