//! Command-line driver: certificate search, decay-rate sweeps, candidate
//! construction with an exact Gram certificate, sampled verification,
//! constant estimation from trajectories, and SOS problem export.
//!
//! Exit codes: 0 success (feasible / decreasing / stable), 2 for a negative
//! domain verdict, 3 when the term cap is exceeded, 64 for usage errors,
//! 1 for internal failures. JSON goes to stdout, diagnostics to stderr.

mod sos;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use convlyap::bounds::{self, SearchOutcome, StabilityData};
use convlyap::dynamics::{self, DynamicsError};
use convlyap::lyapunov::{construct_v, LyapunovResult};
use convlyap::picard::{self, PicardError};
use convlyap::polyalg::{parse_system, Polynomial, VectorField};
use convlyap::ratio::parse_rational;
use convlyap::verify;

const EXIT_NEGATIVE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "convlyap", version, about = "Converse Lyapunov certificates for polynomial vector fields", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for feasible piecewise-approximation parameters and print the
    /// certificate as JSON
    Bound(BoundArgs),
    /// Sweep the decay rate and print one CSV row per value
    Sweep(SweepArgs),
    /// Build the Lyapunov candidate and its Gram certificate as JSON
    Construct(ConstructArgs),
    /// Sample the decrease inequality for a candidate on a ball
    Verify(VerifyArgs),
    /// Estimate overshoot, decay rate, and Lipschitz bound from trajectories
    Estimate(EstimateArgs),
    /// Emit the data of the SOS feasibility problem for an external solver
    ExportSos(sos::ExportSosArgs),
}

/// Stability constants shared by the search commands (decay rate separate,
/// because `sweep` ranges over it).
#[derive(Args)]
struct SystemConstants {
    /// Overshoot constant K >= 1
    #[arg(long = "K")]
    overshoot: f64,
    /// Lipschitz bound L > 0 on the ball
    #[arg(long = "L")]
    lipschitz: f64,
    /// Ball radius r > 0
    #[arg(long)]
    r: f64,
    /// Degree of the vector field
    #[arg(long)]
    q: u32,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    constants: SystemConstants,
    /// Exponential decay rate lambda > 0
    #[arg(long)]
    lambda: f64,
    /// Number of interval-width grid points to try
    #[arg(long, default_value_t = 64)]
    tgrid: usize,
    /// Largest iteration count to try
    #[arg(long, default_value_t = 30)]
    kmax: usize,
    /// Sweep the integration endpoint jointly with the width instead of
    /// pinning it to ln(2K^2)/(2 lambda)
    #[arg(long)]
    free_delta: bool,
    /// Endpoint grid size in free-delta mode
    #[arg(long, default_value_t = 64)]
    dgrid: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    constants: SystemConstants,
    /// Smallest decay rate
    #[arg(long)]
    lambda_from: f64,
    /// Largest decay rate
    #[arg(long)]
    lambda_to: f64,
    /// Number of evenly spaced decay rates
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 64)]
    tgrid: usize,
    #[arg(long, default_value_t = 30)]
    kmax: usize,
}

#[derive(Args)]
struct ConstructArgs {
    /// File with one equation per component, e.g. "x1' = -x2; x2' = x1"
    #[arg(long)]
    system: PathBuf,
    /// Picard iterations per piece
    #[arg(long)]
    k: usize,
    /// Number of pieces
    #[arg(long = "N")]
    n_pieces: usize,
    /// Piece width as an exact rational ("1/4", "0.25", "3")
    #[arg(long = "T")]
    width: String,
    /// Integration endpoint as an exact rational in (0, N*T]
    #[arg(long)]
    delta: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// File with one equation per component
    #[arg(long)]
    system: PathBuf,
    /// JSON candidate: either `construct` output or a bare polynomial
    #[arg(long)]
    lyapunov: PathBuf,
    /// Ball radius to sample
    #[arg(long)]
    radius: f64,
    /// Number of sample points
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args)]
struct EstimateArgs {
    /// File with one equation per component
    #[arg(long)]
    system: PathBuf,
    /// Radius of the ball of initial conditions
    #[arg(long)]
    radius: f64,
    /// Number of trajectories
    #[arg(long, default_value_t = 32)]
    samples: usize,
    /// Integration horizon
    #[arg(long, default_value_t = 20.0)]
    tend: f64,
    /// Integrator step size
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// Jacobian lattice resolution per dimension
    #[arg(long, default_value_t = 41)]
    grid: usize,
}

/// A command failure carrying the exit code it maps to. The message goes to
/// stderr; anything already printed to stdout stays valid JSON.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successful exits, not usage errors.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Bound(args) => cmd_bound(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Construct(args) => cmd_construct(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::ExportSos(args) => sos::cmd_export_sos(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn stability_data(constants: &SystemConstants, lambda: f64) -> Result<StabilityData, Failure> {
    StabilityData::new(constants.overshoot, lambda, constants.lipschitz, constants.r, constants.q)
        .map_err(|e| Failure::usage(e.to_string()))
}

fn cmd_bound(args: BoundArgs) -> CmdResult {
    let data = stability_data(&args.constants, args.lambda)?;
    if args.tgrid == 0 || args.kmax == 0 || (args.free_delta && args.dgrid == 0) {
        return Err(Failure::usage("grid sizes and kmax must be at least 1"));
    }
    let outcome = if args.free_delta {
        bounds::search_bound_free_delta(&data, args.tgrid, args.kmax, args.dgrid)
    } else {
        bounds::search_bound(&data, args.tgrid, args.kmax)
    };
    match outcome {
        SearchOutcome::Feasible { certificate } => {
            print_json(&certificate)?;
            Ok(0)
        }
        infeasible => {
            print_json(&infeasible)?;
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    if args.steps == 0 {
        return Err(Failure::usage("steps must be at least 1"));
    }
    if args.steps > 1 && args.lambda_to <= args.lambda_from {
        return Err(Failure::usage("lambda-to must exceed lambda-from"));
    }
    if args.tgrid == 0 || args.kmax == 0 {
        return Err(Failure::usage("grid sizes and kmax must be at least 1"));
    }
    emit("lambda,T,N,k,degree_bound,feasible")?;
    for i in 0..args.steps {
        let lambda = if args.steps == 1 {
            args.lambda_from
        } else {
            let frac = i as f64 / (args.steps - 1) as f64;
            args.lambda_from + (args.lambda_to - args.lambda_from) * frac
        };
        let data = stability_data(&args.constants, lambda)?;
        match bounds::search_bound(&data, args.tgrid, args.kmax) {
            SearchOutcome::Feasible { certificate: c } => {
                emit(&format!(
                    "{lambda},{},{},{},{},true",
                    c.t, c.n_pieces, c.k, c.degree_bound
                ))?;
            }
            SearchOutcome::Infeasible { .. } => emit(&format!("{lambda},,,,,false"))?,
        }
    }
    Ok(0)
}

fn cmd_construct(args: ConstructArgs) -> CmdResult {
    let f = load_system(&args.system)?;
    let width = parse_positive_rational(&args.width, "T")?;
    let delta = parse_positive_rational(&args.delta, "delta")?;
    let cap = term_cap()?;
    let g = picard::extend(&f, args.k, args.n_pieces, &width, cap).map_err(|e| match e {
        PicardError::TermCapExceeded { .. } => Failure { code: EXIT_RESOURCE, message: e.to_string() },
        other => Failure::usage(other.to_string()),
    })?;
    let mut result = construct_v(&g, &delta).map_err(|e| Failure::usage(e.to_string()))?;
    corrupt_if_requested(&mut result);
    // Nothing leaves this process unless the certificate survives its own
    // audit: exact PSD blocks and bit-exact reconstruction of V.
    if let Err((block, row)) = result.gram.check_psd() {
        return Err(Failure::internal(format!(
            "Gram block {block} is not positive semidefinite (witness row {row}); refusing to emit"
        )));
    }
    if result.gram.reconstruct() != result.v {
        return Err(Failure::internal(
            "Gram form does not reconstruct the candidate exactly; refusing to emit",
        ));
    }
    print_json(&result)?;
    Ok(0)
}

/// Test hook: sabotage the certificate so the refuse-to-emit gate is
/// observable from the outside. Never set outside the test suite. Adding
/// keeps the block PSD but breaks reconstruction; subtracting drives a
/// diagonal entry negative so the PSD check trips first.
fn corrupt_if_requested(result: &mut LyapunovResult) {
    let Some(block) = result.gram.blocks.first_mut() else { return };
    match std::env::var("CONVLYAP_FAULT").as_deref() {
        Ok("corrupt-gram") => block.matrix[0][0] += BigRational::one(),
        Ok("corrupt-gram-negative") => block.matrix[0][0] -= BigRational::one(),
        _ => {}
    }
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let f = load_system(&args.system)?;
    let v = load_candidate(&args.lyapunov)?;
    let report = verify::check_lyapunov(&v, &f, args.radius, args.samples)
        .map_err(|e| Failure::usage(e.to_string()))?;
    print_json(&report)?;
    Ok(if report.is_decreasing() { 0 } else { EXIT_NEGATIVE })
}

fn cmd_estimate(args: EstimateArgs) -> CmdResult {
    let f = load_system(&args.system)?;
    match dynamics::estimate_report(&f, args.radius, args.samples, args.tend, args.h, args.grid) {
        Ok(report) => {
            print_json(&report)?;
            // A fitted growth rate is as damning as a blowup: trajectories
            // expand on this ball even though none crossed the abort norm.
            Ok(if report.lambda_hat > 0.0 { 0 } else { EXIT_NEGATIVE })
        }
        Err(e @ (DynamicsError::Unstable { .. } | DynamicsError::Blowup { .. })) => {
            let diagnostic = serde_json::json!({
                "stable": false,
                "detail": e.to_string(),
            });
            print_json(&diagnostic)?;
            Ok(EXIT_NEGATIVE)
        }
        Err(other) => Err(Failure::usage(other.to_string())),
    }
}

fn load_system(path: &Path) -> Result<VectorField, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_system(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Accept either the JSON emitted by `construct` (object with a "V" field)
/// or a bare polynomial (array of terms).
fn load_candidate(path: &Path) -> Result<Polynomial, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let poly_value = match &value {
        serde_json::Value::Object(map) if map.contains_key("V") => &map["V"],
        _ => &value,
    };
    serde_json::from_value(poly_value.clone())
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn parse_positive_rational(text: &str, flag: &str) -> Result<BigRational, Failure> {
    use num_traits::Zero;
    let value = parse_rational(text)
        .ok_or_else(|| Failure::usage(format!("--{flag} must be a rational like 1/4 or 0.25, got {text:?}")))?;
    if value <= BigRational::zero() {
        return Err(Failure::usage(format!("--{flag} must be positive, got {text}")));
    }
    Ok(value)
}

fn term_cap() -> Result<usize, Failure> {
    match std::env::var("CONVLYAP_TERM_CAP") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::usage(format!("CONVLYAP_TERM_CAP must be a positive integer, got {s:?}"))),
        Err(_) => Ok(picard::DEFAULT_TERM_CAP),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::internal(format!("serialization failed: {e}")))?;
    emit(&text)
}

/// Write one line to stdout. A closed pipe means the consumer has everything
/// it wants; stop quietly instead of panicking.
fn emit(line: &str) -> Result<(), Failure> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{line}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(Failure::internal(format!("cannot write to stdout: {e}"))),
    }
}
