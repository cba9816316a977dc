//! Batch front end for the ellikorn toolkit: one subcommand per experiment, each
//! writing a JSON report whose checks decide the exit code.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod commands;
pub mod fields;
pub mod report;

pub use report::{Basis, Check, Report, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("file error: {0}")]
    File(String),
    #[error("computation failed: {0}")]
    Compute(String),
}

#[derive(Parser, Debug)]
#[command(name = "ellikorn", version, about = "Verification experiments for constant-coefficient differential operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ellipticity and C-ellipticity verdict with nullspace profile and witness.
    Analyze(AnalyzeArgs),
    /// Nullspace projection on a ball: exact identities and grid stability.
    Project(ProjectArgs),
    /// Chain-cover decomposition of moment-free fields.
    Decompose(DecomposeArgs),
    /// Calderón–Zygmund cubes, Muckenhoupt constants and Fefferman–Stein ratios.
    Maximal(MaximalArgs),
    /// Half-space trace ratios and the non-elliptic blow-up family.
    Trace(TraceArgs),
    /// Korn constants C(h) across grid refinements.
    Korn(KornArgs),
    /// Whitney and chain covers with their structural checks.
    Domains(DomainsArgs),
    /// Writes the built-in operator spec files.
    Gallery(GalleryArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional CSV table for plotting.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct DomainArgs {
    /// square, disk, lshape, slit, snowflake or halfspace_strip.
    #[arg(long, default_value = "square")]
    pub domain: String,
    /// Domain parameters as k=v pairs, e.g. radius=0.5 or iter=3.
    #[arg(long, default_value = "")]
    pub param: String,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    /// Operator spec file, or gallery:<name>.
    #[arg(long)]
    pub op: String,
    #[arg(long, default_value_t = 12)]
    pub max_degree: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone)]
pub struct ProjectArgs {
    #[arg(long)]
    pub op: String,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, default_value = "1/32")]
    pub h: String,
    /// Ball centre as x,y; defaults to the deepest cell of the domain.
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Grid functions for the stability ratios.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Random cubics for the commutation identity.
    #[arg(long, default_value_t = 20)]
    pub cubics: usize,
    #[arg(long, default_value_t = 12)]
    pub max_degree: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone)]
pub struct DecomposeArgs {
    #[arg(long, default_value = "gallery:sym_grad_2d")]
    pub op: String,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, default_value = "1/32")]
    pub h: String,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// unit, power:a=<a>,cx=<x>,cy=<y> or file:<path>.
    #[arg(long, default_value = "unit")]
    pub weight: String,
    /// Moment space: derivatives of order ell of the operator kernel (0 = the kernel).
    #[arg(long, default_value_t = 1)]
    pub ell: u32,
    /// Wavelength band of the random fields, in cycles per unit length.
    #[arg(long, default_value = "3,5")]
    pub band: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone)]
pub struct MaximalArgs {
    /// Operator whose kernel is the subspace of the sharp maximal function.
    #[arg(long, default_value = "gallery:sym_grad_2d")]
    pub op: String,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, default_value = "1/32")]
    pub h: String,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value = "unit")]
    pub weight: String,
    #[arg(long, default_value_t = 1.25)]
    pub sigma: f64,
    /// Fields for the Fefferman–Stein ratios.
    #[arg(long, default_value_t = 30)]
    pub trials: usize,
    /// Side of the dyadic box for the Calderón–Zygmund checks.
    #[arg(long, default_value_t = 64)]
    pub cz_grid: usize,
    #[arg(long, default_value_t = 10)]
    pub cz_trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFamily {
    Bumps,
    Harmonic,
    Blowup,
}

#[derive(Args, Debug, Clone)]
pub struct TraceArgs {
    #[arg(long)]
    pub op: String,
    /// Tangential resolutions, comma separated powers of two.
    #[arg(long, default_value = "128,256")]
    pub grid: String,
    #[arg(long, value_enum, default_value = "bumps")]
    pub family: TraceFamily,
    /// Interior exponent of the blow-up family.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Boundary exponent of the blow-up family.
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[arg(long, default_value_t = 0.5)]
    pub depth: f64,
    /// Real kernel frequency of the symbol for the blow-up family, e.g. 0,1.
    #[arg(long)]
    pub xi: Option<String>,
    /// Kernel vector of the symbol at xi.
    #[arg(long)]
    pub v: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Args, Debug, Clone)]
pub struct KornArgs {
    #[arg(long)]
    pub op: String,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Mesh sizes, comma separated rationals such as 1/16,1/32.
    #[arg(long, default_value = "1/16,1/32,1/64")]
    pub h: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub weight: Option<String>,
    /// Second Lorentz exponent; measures in L^{p,q}.
    #[arg(long)]
    pub lorentz: Option<f64>,
    /// Logarithmic exponent beta of the Orlicz function t^p (1 + ln(1 + t))^beta.
    #[arg(long)]
    pub orlicz: Option<f64>,
    /// Restrict to fields vanishing near the boundary.
    #[arg(long)]
    pub dirichlet: bool,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: Method,
    /// Fields per mesh for sampled (non-Hilbert) norms.
    #[arg(long, default_value_t = 30)]
    pub trials: usize,
    #[arg(long, default_value_t = 12)]
    pub max_degree: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone)]
pub struct DomainsArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, default_value = "1/64")]
    pub h: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone)]
pub struct GalleryArgs {
    /// Directory for the spec files.
    #[arg(long)]
    pub dir: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

/// What a subcommand hands back for writing.
pub struct Outcome {
    pub report: Report,
    pub table: Option<Table>,
    /// A ℂ-ellipticity verdict stayed open within the degree budget.
    pub undecided: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.undecided {
            2
        } else if self.report.all_pass() {
            0
        } else {
            1
        }
    }
}

/// Caps the rayon pool at ELLIKORN_THREADS workers.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ELLIKORN_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Usage(format!("ELLIKORN_THREADS={v} is not a positive integer")))?;
    // A pool built by an earlier call in the same process stays in place.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Analyze(a) => commands::analyze::run(a),
        Command::Project(a) => commands::project::run(a),
        Command::Decompose(a) => commands::decompose::run(a),
        Command::Maximal(a) => commands::maximal::run(a),
        Command::Trace(a) => commands::trace::run(a),
        Command::Korn(a) => commands::korn::run(a),
        Command::Domains(a) => commands::domains::run(a),
        Command::Gallery(a) => commands::gallery::run(a),
    }
}

fn output_of(command: &Command) -> &Output {
    match command {
        Command::Analyze(a) => &a.output,
        Command::Project(a) => &a.output,
        Command::Decompose(a) => &a.output,
        Command::Maximal(a) => &a.output,
        Command::Trace(a) => &a.output,
        Command::Korn(a) => &a.output,
        Command::Domains(a) => &a.output,
        Command::Gallery(a) => &a.output,
    }
}

fn write_outputs(outcome: &Outcome, output: &Output) -> Result<(), CliError> {
    let json = outcome.report.to_json();
    match &output.out {
        Some(path) => std::fs::write(path, json).map_err(|e| CliError::File(format!("{}: {e}", path.display())))?,
        None => std::io::stdout().write_all(json.as_bytes()).map_err(|e| CliError::File(e.to_string()))?,
    }
    if let Some(path) = &output.csv {
        let table = outcome.table.clone().unwrap_or_else(|| {
            let mut t = Table::new(&["metric", "value"]);
            for (k, v) in &outcome.report.metrics {
                t.push(vec![k.clone(), report::fmt_f64(*v)]);
            }
            t
        });
        table.write_to(path).map_err(|e| CliError::File(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Parses argv (program name first), runs the subcommand, writes the report and
/// returns the exit code: 0 when every check passes, 2 for an undecided verdict,
/// 1 for errors and failed checks.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = configure_threads()
        .and_then(|_| execute(&cli.command))
        .and_then(|outcome| write_outputs(&outcome, output_of(&cli.command)).map(|_| outcome.exit_code()));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ellikorn: {e}");
            1
        }
    }
}
