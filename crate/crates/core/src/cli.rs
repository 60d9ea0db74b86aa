//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, unreadable or
//! malformed input), 2 when conditioning or the solver fails.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{self, GenSpec, ScalingConfig};
use crate::instance::{Mode, ProblemInstance};
use crate::matrix::{parse_matrix_market, write_matrix_market, SparseNonnegMatrix};
use crate::reduction::ReducedInstance;
use crate::reference::lp::exact_opt;
use crate::solver::{solve, SolveReport, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "paklo", version, about = "Packing and covering LP solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a packing or covering LP given as a Matrix Market file.
    Solve(SolveArgs),
    /// Write the diameter-reduced covering matrix and its column map.
    Reduce(ReduceArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Run the ε-scaling experiment on a covering instance.
    Bench(BenchArgs),
    /// Exact optimum of a small instance.
    Oracle(OracleArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long, value_parser = parse_mode)]
    pub problem: Mode,
    #[arg(long, value_parser = parse_eps)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub input: PathBuf,
    /// Result document path; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Trace CSV path.
    #[arg(long)]
    #[serde(skip)]
    pub trace: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub refresh_interval: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Report wall-clock time (makes output nondeterministic).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Reduced matrix output path.
    #[arg(long)]
    pub output: PathBuf,
    /// Column map path; defaults to the output path with `.colmap` appended.
    #[arg(long)]
    pub map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lo: f64,
    #[arg(long, default_value_t = 10.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025", value_parser = parse_eps)]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub seeds: Vec<u64>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_parser = parse_mode)]
    pub problem: Mode,
    #[arg(long)]
    pub input: PathBuf,
    /// Solve the diameter-reduced covering LP with its caps instead.
    #[arg(long)]
    pub reduced: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_eps(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err(format!("eps must lie in (0, 0.5), got {v}"))
    }
}

/// Outcome of a failed command: exit code and one-line diagnostic.
struct Failure(i32, String);

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, msg.to_string())
}

fn solver_failure(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_SOLVER, msg.to_string())
}

/// Runs the CLI with the given arguments (including the program name) and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a, stdout),
        Command::Reduce(a) => cmd_reduce(&a, stderr),
        Command::Gen(a) => cmd_gen(&a, stdout),
        Command::Bench(a) => cmd_bench(&a, stdout, stderr),
        Command::Oracle(a) => cmd_oracle(&a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}

fn read_matrix(path: &Path) -> Result<SparseNonnegMatrix, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix_market(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_instance(path: &Path, mode: Mode) -> Result<ProblemInstance, Failure> {
    ProblemInstance::new(read_matrix(path)?, mode).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| usage(format!("cannot write output: {e}"))),
    }
}

#[derive(Serialize)]
struct SolveDocument<'a> {
    mode: Mode,
    eps: f64,
    seed: u64,
    objective: f64,
    feasibility_residual: f64,
    feasible: bool,
    iterations: u64,
    scheduled_iterations: u64,
    reduced_n: usize,
    scale: f64,
    fixup_count: usize,
    final_rescale: f64,
    wall_ms: Option<u64>,
    solution: &'a [f64],
    config: &'a SolveArgs,
}

/// Feasibility tolerances of the reported solution.
pub const COVER_TOLERANCE: f64 = 1e-9;
pub const PACK_TOLERANCE: f64 = 1e-12;

fn is_feasible(r: &SolveReport) -> bool {
    match r.mode {
        Mode::Cover => r.feasibility_residual >= -COVER_TOLERANCE,
        Mode::Pack => r.feasibility_residual >= -PACK_TOLERANCE,
    }
}

fn cmd_solve(a: &SolveArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let inst = read_instance(&a.input, a.problem)?;
    let mut cfg = SolverConfig::new(a.eps, a.seed);
    cfg.refresh_interval = a.refresh_interval;
    cfg.max_iters = a.max_iters;
    let t0 = Instant::now();
    let report = solve(&inst, &cfg).map_err(solver_failure)?;
    let wall_ms = a.timing.then(|| t0.elapsed().as_millis() as u64);
    let doc = SolveDocument {
        mode: report.mode,
        eps: report.eps,
        seed: report.seed,
        objective: report.objective,
        feasibility_residual: report.feasibility_residual,
        feasible: is_feasible(&report),
        iterations: report.iterations,
        scheduled_iterations: report.scheduled_iterations,
        reduced_n: report.reduced_n,
        scale: report.scale,
        fixup_count: report.fixup_count,
        final_rescale: report.final_rescale,
        wall_ms,
        solution: &report.solution,
        config: a,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(solver_failure)?;
    text.push('\n');
    if let Some(path) = &a.trace {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| usage(format!("cannot write trace: {e}"));
        w.write_record(["iteration", "f_mu", "objective", "residual"]).map_err(io)?;
        for t in &report.trace {
            w.serialize(t).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| usage(e.to_string()))?;
        fs::write(path, bytes).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    emit(a.output.as_deref(), &text, stdout)
}

fn cmd_reduce(a: &ReduceArgs, stderr: &mut dyn Write) -> Result<(), Failure> {
    let m = read_matrix(&a.input)?;
    let red = ReducedInstance::reduce(&m);
    fs::write(&a.output, write_matrix_market(red.matrix()))
        .map_err(|e| usage(format!("cannot write {}: {e}", a.output.display())))?;
    let map_path = a.map.clone().unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".colmap");
        PathBuf::from(p)
    });
    fs::write(&map_path, red.write_column_map())
        .map_err(|e| usage(format!("cannot write {}: {e}", map_path.display())))?;
    let _ = writeln!(
        stderr,
        "reduced {} columns to {} ({} nonzeros)",
        red.original_n(),
        red.reduced_n(),
        red.matrix().nnz()
    );
    Ok(())
}

fn cmd_gen(a: &GenArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let spec = GenSpec {
        m: a.m,
        n: a.n,
        density: a.density,
        value_range: (a.lo, a.hi),
        seed: a.seed,
    };
    let inst = bench::generate(&spec, Mode::Cover).map_err(usage)?;
    emit(a.output.as_deref(), &write_matrix_market(inst.matrix()), stdout)
}

fn cmd_bench(a: &BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let inst = read_instance(&a.input, Mode::Cover)?;
    let cfg = ScalingConfig {
        timing: a.timing,
        ..ScalingConfig::default()
    };
    let result = bench::scaling_experiment(&inst, &a.eps, &a.seeds, &cfg).map_err(solver_failure)?;
    let csv = bench::rows_to_csv(&result.rows).map_err(solver_failure)?;
    emit(a.output.as_deref(), &csv, stdout)?;
    for s in &result.summary {
        let _ = writeln!(
            stderr,
            "{} eps={} median_iterations={} reached={}/{}",
            s.solver, s.eps, s.median_iterations, s.reached, s.runs
        );
    }
    let fmt = |s: Option<f64>| s.map_or("absent".to_string(), |v| format!("{v:.3}"));
    let _ = writeln!(
        stderr,
        "slope accelerated={} baseline={}",
        fmt(result.slope_accelerated),
        fmt(result.slope_baseline)
    );
    Ok(())
}

#[derive(Serialize)]
struct OracleDocument {
    mode: Mode,
    reduced: bool,
    opt: String,
    opt_f64: f64,
    x: Vec<String>,
}

fn cmd_oracle(a: &OracleArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let m = read_matrix(&a.input)?;
    let res = if a.reduced {
        if a.problem != Mode::Cover {
            return Err(usage("--reduced applies to covering instances only"));
        }
        let red = ReducedInstance::reduce(&m);
        exact_opt(red.matrix(), Mode::Cover, Some(red.caps()))
    } else {
        exact_opt(&m, a.problem, None)
    }
    .map_err(solver_failure)?;
    let doc = OracleDocument {
        mode: a.problem,
        reduced: a.reduced,
        opt: res.opt.to_string(),
        opt_f64: res.opt_f64(),
        x: res.x.iter().map(ToString::to_string).collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(solver_failure)?;
    text.push('\n');
    emit(None, &text, stdout)
}
