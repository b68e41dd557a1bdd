use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use super::export::describe_jump;
use super::{export_json, export_obj, export_svg, parse_box, IoError, JobSpec};
use crate::driver::{approx_plot, verify_epsilon, CoefficientMode, DriverError, RunConfig};
use crate::solver::SolverError;
use crate::tracer::StepMode;

const EXIT_INPUT: i32 = 2;
const EXIT_SOLVER_CAP: i32 = 3;
const SVG_SIZE: u32 = 800;
const VERIFY_SAMPLES: usize = 250_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Svg,
    Obj,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Svg => "svg",
            Format::Obj => "obj",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Practical,
    Robust,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CoeffArg {
    Exact,
    Perturbed,
}

/// Polygonal approximation of a real algebraic curve inside a box.
#[derive(Debug, Parser)]
#[command(name = "curvetrace", version)]
struct Cli {
    /// JSON job file with "system", "variables", "box" and optional "config".
    #[arg(long, conflicts_with_all = ["expr", "vars", "box_spec"])]
    input: Option<PathBuf>,
    /// Polynomial of the system (repeat once per equation).
    #[arg(long)]
    expr: Vec<String>,
    /// Comma-separated variable names, e.g. x,y.
    #[arg(long, value_delimiter = ',')]
    vars: Vec<String>,
    /// Box as "lo,hi;lo,hi;...".
    #[arg(long = "box", id = "box_spec", allow_hyphen_values = true)]
    box_spec: Option<String>,
    /// Approximation tolerance.
    #[arg(long)]
    eps: f64,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    coeffs: Option<CoeffArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Output format (repeatable).
    #[arg(long, value_enum)]
    format: Vec<Format>,
    /// Output path; with several formats the extension is replaced per format.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    /// Measure the distances between the output and the curve.
    #[arg(long)]
    verify: bool,
}

fn job_from(cli: &Cli) -> Result<JobSpec, IoError> {
    let mut job = match &cli.input {
        Some(path) => JobSpec::from_json(&std::fs::read_to_string(path)?)?,
        None => {
            let bounds = parse_box(cli.box_spec.as_deref().ok_or_else(|| IoError::Input("--box is required with --expr".into()))?)?;
            if cli.expr.is_empty() {
                return Err(IoError::Input("give --input or at least one --expr".into()));
            }
            let job = JobSpec { system: cli.expr.clone(), variables: cli.vars.clone(), bounds, config: RunConfig::default() };
            job.validate()?;
            job
        }
    };
    let c = &mut job.config;
    c.eps = cli.eps;
    if let Some(m) = cli.mode {
        c.mode = match m {
            ModeArg::Practical => StepMode::Practical,
            ModeArg::Robust => StepMode::Robust,
        };
    }
    if let Some(m) = cli.coeffs {
        c.coefficient_mode = match m {
            CoeffArg::Exact => CoefficientMode::Exact,
            CoeffArg::Perturbed => CoefficientMode::Perturbed,
        };
    }
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(r) = cli.rho {
        c.rho = r;
    }
    Ok(job)
}

fn configure_threads() -> Result<(), IoError> {
    let Ok(v) = std::env::var("CURVETRACE_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| IoError::Input(format!("CURVETRACE_THREADS={v:?} is not a count")))?;
    // A pool built earlier in the same process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn output_path(base: &Path, fmt: Format, several: bool) -> PathBuf {
    if several {
        base.with_extension(fmt.extension())
    } else {
        base.to_path_buf()
    }
}

/// Runs the command line `args` (program name first) and returns the process exit code:
/// 0 on success, 2 on input errors, 3 when a polynomial system exceeds the solver's
/// total-degree cap.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    let job = match job_from(&cli) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let (sys, bounds) = match (job.curve_system(), job.bounding_box()) {
        (Ok(s), Ok(b)) => (s, b),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let curve = match approx_plot(&sys, &bounds, &job.config) {
        Ok(c) => c,
        Err(DriverError::Solver(e @ SolverError::TotalDegreeCap { .. })) => {
            eprintln!("error: {e}");
            return EXIT_SOLVER_CAP;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    for j in &curve.jump_reports {
        eprintln!("warning: possible curve jump: {}", describe_jump(j));
    }
    if cli.verify {
        let rep = verify_epsilon(&curve, &sys, &bounds, VERIFY_SAMPLES);
        match rep.curve_to_approx {
            Some(d) => eprintln!("verify: curve->chains {d:.6e}"),
            None => eprintln!("verify: curve->chains unavailable (no curve samples for n >= 3)"),
        }
        eprintln!("verify: chains->curve {:.6e}", rep.approx_to_curve);
    }

    let formats = if cli.format.is_empty() { vec![Format::Json] } else { cli.format.clone() };
    for &fmt in &formats {
        let bytes = match fmt {
            Format::Json => Ok(export_json(&curve)),
            Format::Svg => export_svg(&curve, SVG_SIZE, SVG_SIZE),
            Format::Obj => export_obj(&curve, None),
        };
        let bytes = match bytes {
            Ok(b) => b,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
        };
        let written = match &cli.output {
            Some(base) => std::fs::write(output_path(base, fmt, formats.len() > 1), &bytes),
            None => std::io::stdout().write_all(&bytes),
        };
        if let Err(e) = written {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    }
    0
}
