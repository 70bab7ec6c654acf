//! Command-line front end: configuration, subcommands and report writers.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pressure_lab_core::ErrorClass;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_PARSE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pressure-lab", version, about = "Pressure curves, exceptional sets and transfer-operator diagnostics for interval maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map summary, periodic statistics and pressure estimates at a few t values.
    Analyze(AnalyzeArgs),
    /// Exceptional set, coboundary coefficients and the transformed potential.
    Cohomology(CommonArgs),
    /// Sample P(t) on a grid of negative t and write CSV.
    PressureCurve(CurveArgs),
    /// Check the finite counting inequality on exhaustive or random partial maps.
    TecFuzz(TecArgs),
    /// Oscillation norms, spectral gap and correlation decay of the normalised operator.
    Keller(KellerArgs),
    /// Locate the phase transition and check it against the exceptional-set criterion.
    Transition(CurveArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named map: chebyshev2, chebyshev3, tent, ulam or quadratic(a).
    #[arg(long)]
    pub map: Option<String>,
    /// `geometric`, `constant:<value>` or an expression in x.
    #[arg(long, allow_hyphen_values = true)]
    pub potential: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the run manifest (defaults to `<out>.manifest.json` for CSV output).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Preimage tree depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Number of collocation cells.
    #[arg(long = "collocation-size", alias = "n")]
    pub collocation_size: Option<usize>,
    #[arg(long = "max-period")]
    pub max_period: Option<usize>,
    /// Tree base point; drawn from the seed when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Values of t, as start:stop:count.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Grid of negative t values, as start:stop:count.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Also write an SVG plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Tolerance window reported with the transition location.
    #[arg(long)]
    pub window: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TecArgs {
    #[arg(long = "max-size", default_value_t = 5)]
    pub max_size: usize,
    /// Enumerate every partial map instead of sampling.
    #[arg(long)]
    pub exhaustive: bool,
    /// Random draws per size when sampling.
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct KellerArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long = "collocation-size", alias = "n")]
    pub collocation_size: Option<usize>,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Reference measure for the norms: conformal or uniform.
    #[arg(long, default_value = "conformal")]
    pub reference: String,
    #[arg(long = "n-max", default_value_t = 40)]
    pub n_max: usize,
}

/// Exit code for an error raised anywhere in a run.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<pressure_lab_core::Error>() {
            return match e.class() {
                ErrorClass::Validation => EXIT_VALIDATION,
                ErrorClass::Numeric => EXIT_NUMERIC,
                ErrorClass::Parse => EXIT_PARSE,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return EXIT_PARSE;
        }
    }
    EXIT_VALIDATION
}

/// Parses `argv` and runs the command. Usage errors map to the validation exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match commands::run(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
