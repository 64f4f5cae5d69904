//! The `lqss` command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 ambiguous rank decision,
//! 4 output could not be written, 5 verification failed.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::document::{
    to_json, DecompositionReport, ExampleDocument, ExampleQuantities, SystemDocument, SCHEMA_VERSION,
};
use crate::error::Error;
use crate::factorization::FactorizationMode;
use crate::kalman::{
    classify_states, from_transform, kalman_decompose, refine, verify_decomposition, ClassifiedState,
    KalmanDecomposition, VerificationReport,
};
use crate::linalg::TolerancePolicy;
use crate::model::{random_system, ClassDims, RandomOptions, ScatteringKind};
use crate::optomech::OptomechParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RANK: i32 = 3;
pub const EXIT_WRITE: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

/// Residual tolerance used by `verify` unless overridden.
pub const VERIFY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "lqss", version, about = "Symplectic Kalman decomposition of linear quantum stochastic systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print class dimensions, state labels and residuals.
    Analyze(DecomposeArgs),
    /// Write the full decomposition report.
    Decompose(DecomposeArgs),
    /// Re-check a stored report against its system.
    Verify(VerifyArgs),
    /// The built-in optomechanical system and its decomposition.
    Example(ExampleArgs),
    /// Write a random system document.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Strict,
    Relaxed,
}

impl From<Mode> for FactorizationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Strict => FactorizationMode::Strict,
            Mode::Relaxed => FactorizationMode::Relaxed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scattering {
    Identity,
    Exponential,
}

#[derive(Clone, Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Args)]
pub struct ParamArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub gamma: f64,
}

#[derive(Clone, Debug, Args)]
pub struct DecomposeArgs {
    /// System document (JSON).
    #[arg(required_unless_present = "example")]
    pub input: Option<PathBuf>,
    /// Use the built-in optomechanical system instead of a file.
    #[arg(long, conflicts_with = "input")]
    pub example: bool,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Rank threshold scale.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "strict")]
    pub mode: Mode,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct VerifyArgs {
    /// System document (JSON).
    pub input: PathBuf,
    /// Decomposition report (JSON).
    pub report: PathBuf,
    /// Rank threshold scale for the independent oracles.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Bound on the matrix residuals.
    #[arg(long, default_value_t = VERIFY_TOLERANCE)]
    pub residual_tolerance: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct ExampleArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Report the decomposition in the refined orthogonal coordinates.
    #[arg(long)]
    pub refined: bool,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "strict")]
    pub mode: Mode,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Class dimensions `k,l,d` of a structured draw.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<ClassDims>,
    #[arg(long, value_enum, default_value = "identity")]
    pub scattering: Scattering,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_dims(s: &str) -> Result<ClassDims, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [k, l, d] => Ok(ClassDims { k, l, d }),
        _ => Err("expected k,l,d".into()),
    }
}

/// A failed command: exit code plus message for standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::RankAmbiguity { .. } | Error::DegeneratePairing { .. } => EXIT_RANK,
            Error::InternalConsistency(_) => EXIT_VERIFY,
            _ => EXIT_VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_VALIDATION,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn emit(out: &OutputArgs, stdout: &mut dyn Write, text: &str) -> Result<(), Failure> {
    let written = match &out.output {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| format!("cannot write output: {e}")),
    };
    written.map_err(|message| Failure {
        code: EXIT_WRITE,
        message,
    })
}

fn policy_with(base: TolerancePolicy, scale: Option<f64>) -> Result<TolerancePolicy, Failure> {
    match scale {
        None => Ok(base),
        Some(s) if s.is_finite() && s > 0.0 => Ok(TolerancePolicy { scale: s, ..base }),
        Some(s) => Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("--tolerance must be positive and finite, got {s}"),
        }),
    }
}

fn params(p: &ParamArgs) -> Result<OptomechParams, Failure> {
    Ok(OptomechParams::new(p.omega, p.lambda, p.gamma)?)
}

/// System, rank policy and example quantities selected by the input arguments.
fn load(args: &DecomposeArgs) -> Result<(SystemDocument, TolerancePolicy, Option<ExampleQuantities>), Failure> {
    let (doc, example) = match &args.input {
        Some(path) => (SystemDocument::parse(&read(path)?)?, None),
        None => {
            let p = params(&args.params)?;
            (SystemDocument::example(&p), Some(ExampleQuantities::from(&p)))
        }
    };
    let policy = policy_with(doc.policy()?, args.tolerance)?;
    Ok((doc, policy, example))
}

#[derive(Serialize)]
struct Analysis<'a> {
    schema: u32,
    dims: ClassDims,
    states: Vec<ClassifiedState>,
    residuals: &'a crate::document::ReportResiduals,
}

fn dims_line(d: ClassDims) -> String {
    format!("k={} l={} d={}", d.k, d.l, d.d)
}

fn text_summary(dec: &KalmanDecomposition, report: &DecompositionReport, with_rows: bool) -> String {
    let mut s = dims_line(dec.dims);
    s.push('\n');
    if let Some(ex) = &report.example {
        let _ = writeln!(s, "omega={} lambda={} gamma={} a={} b={}", ex.omega, ex.lambda, ex.gamma, ex.a, ex.b);
    }
    let _ = writeln!(s, "mode={}", serde_json::to_string(&dec.mode).unwrap_or_default().trim_matches('"'));
    for st in classify_states(dec) {
        let _ = write!(s, "{:<4} {:<4}", st.name, st.label.to_string());
        if with_rows {
            let row: Vec<String> = st.row.iter().map(|x| format!("{x:>10.6}")).collect();
            let _ = write!(s, " [{}]", row.join(" "));
        }
        s.push('\n');
    }
    let r = &report.residuals;
    let _ = writeln!(
        s,
        "residuals: symplecticity={:.3e} pattern={:.3e} (bound {:.3e}) reconstruction={:.3e}",
        r.symplecticity, r.pattern, r.pattern_bound, r.reconstruction
    );
    s
}

fn decompose(args: &DecomposeArgs, stdout: &mut dyn Write, full: bool) -> Result<(), Failure> {
    let (doc, policy, example) = load(args)?;
    let sys = doc.to_system()?;
    let dec = kalman_decompose(&sys, &policy, args.mode.into())?;
    let report = DecompositionReport::new(&dec, example);
    let default_format = if full { Format::Json } else { Format::Text };
    let text = match (args.out.format.unwrap_or(default_format), full) {
        (Format::Text, _) => text_summary(&dec, &report, full),
        (Format::Json, true) => to_json(&report),
        (Format::Json, false) => to_json(&Analysis {
            schema: SCHEMA_VERSION,
            dims: dec.dims,
            states: classify_states(&dec),
            residuals: &report.residuals,
        }),
    };
    emit(&args.out, stdout, &text)
}

fn verification_text(report: &VerificationReport) -> String {
    let mut s = String::new();
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{verdict} {:<22} {:.3e} (bound {:.3e})", c.name, c.value, c.bound);
    }
    s
}

fn verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let doc = SystemDocument::parse(&read(&args.input)?)?;
    let sys = doc.to_system()?;
    let report = DecompositionReport::parse(&read(&args.report)?)?;
    let mut stored = report.stored()?;
    stored.policy = policy_with(doc.policy()?, args.tolerance)?;
    if !(args.residual_tolerance.is_finite() && args.residual_tolerance > 0.0) {
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("--residual-tolerance must be positive, got {}", args.residual_tolerance),
        });
    }
    let result = verify_decomposition(&sys, &stored, args.residual_tolerance);
    let text = match args.out.format.unwrap_or(Format::Text) {
        Format::Text => verification_text(&result),
        Format::Json => to_json(&result),
    };
    emit(&args.out, stdout, &text)?;
    if result.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = result.failed().iter().map(|c| c.name.as_str()).collect();
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("verification failed: {}", names.join(", ")),
        })
    }
}

fn example(args: &ExampleArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let p = params(&args.params)?;
    let system = SystemDocument::example(&p);
    let sys = system.to_system()?;
    let policy = policy_with(TolerancePolicy::default(), args.tolerance)?;
    let dec = if args.refined {
        let reference = from_transform(&sys, &p.reference_transform(), &policy)?;
        refine(&reference, &reference.e, &p.reference_refinement())?
    } else {
        kalman_decompose(&sys, &policy, args.mode.into())?
    };
    let report = DecompositionReport::new(&dec, Some(ExampleQuantities::from(&p)));
    let text = match args.out.format.unwrap_or(Format::Json) {
        Format::Text => text_summary(&dec, &report, true),
        Format::Json => to_json(&ExampleDocument {
            schema: SCHEMA_VERSION,
            system,
            report,
        }),
    };
    emit(&args.out, stdout, &text)
}

fn generate(args: &GenerateArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let options = RandomOptions {
        scattering: match args.scattering {
            Scattering::Identity => ScatteringKind::Identity,
            Scattering::Exponential => ScatteringKind::Exponential,
        },
        structure: args.dims,
    };
    let sys = random_system(args.n, args.m, args.seed, options)?;
    let doc = SystemDocument::from_system(&sys);
    let text = match args.out.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&doc),
        Format::Text => {
            let mut s = format!("n={} m={} seed={}\n", args.n, args.m, args.seed);
            let _ = writeln!(s, "R = {:.6}C = {:.6}Sigma = {:.6}", sys.hamiltonian(), sys.coupling(), sys.scattering());
            s
        }
    };
    emit(&args.out, stdout, &text)
}

/// Runs a parsed command, writing results to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Analyze(args) => decompose(args, stdout, false),
        Command::Decompose(args) => decompose(args, stdout, true),
        Command::Verify(args) => verify(args, stdout),
        Command::Example(args) => example(args, stdout),
        Command::Generate(args) => generate(args, stdout),
    }
}

/// Parses `argv`, runs the command and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
