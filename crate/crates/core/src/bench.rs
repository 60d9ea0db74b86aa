//! Random instance generators and the ε-scaling experiment.

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::init;
use crate::instance::{InstanceError, Mode, ProblemInstance};
use crate::matrix::{MatrixError, SparseNonnegMatrix};
use crate::reduction::ReducedInstance;
use crate::reference::baseline::{baseline_mirror_descent, BaselineConfig};
use crate::reference::lp::{exact_opt, LpError};
use crate::smoothing::{ParamError, SmoothedObjective};
use crate::solver::{run_accelerated, schedule, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub m: usize,
    pub n: usize,
    /// Probability that an entry is nonzero.
    pub density: f64,
    pub value_range: (f64, f64),
    pub seed: u64,
}

impl GenSpec {
    fn validate(&self) -> Result<(), BenchError> {
        let bad = |s: String| Err(BenchError::Spec(s));
        if self.m == 0 || self.n == 0 {
            return bad(format!("dimensions must be positive, got {}x{}", self.m, self.n));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density must lie in (0, 1], got {}", self.density));
        }
        if self.density * ((self.m * self.n) as f64) < self.m.max(self.n) as f64 {
            return bad(format!(
                "density {} too low to give every row and column an entry in a {}x{} matrix",
                self.density, self.m, self.n
            ));
        }
        let (lo, hi) = self.value_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("value range must satisfy 0 < lo <= hi, got ({lo}, {hi})"));
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Bernoulli(density) sparsity pattern with uniform values, then every empty
/// row and column receives one entry at a random position.
pub fn generate(spec: &GenSpec, mode: Mode) -> Result<ProblemInstance, BenchError> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut dense = vec![vec![0.0; n]; m];
    for row in dense.iter_mut() {
        for v in row.iter_mut() {
            if rng.gen_bool(spec.density) {
                *v = draw(&mut rng, spec.value_range);
            }
        }
    }
    for j in 0..m {
        if dense[j].iter().all(|&v| v == 0.0) {
            let i = rng.gen_range(0..n);
            dense[j][i] = draw(&mut rng, spec.value_range);
        }
    }
    for i in 0..n {
        if dense.iter().all(|r| r[i] == 0.0) {
            let j = rng.gen_range(0..m);
            dense[j][i] = draw(&mut rng, spec.value_range);
        }
    }
    let a = SparseNonnegMatrix::from_dense(&dense)?;
    Ok(ProblemInstance::new(a, mode)?)
}

/// Every column gets exactly `degree` nonzeros at distinct random rows, so
/// `N/n = degree`. Rows left empty take one extra entry in a random column.
pub fn generate_column_degree(
    m: usize,
    n: usize,
    degree: usize,
    value_range: (f64, f64),
    seed: u64,
    mode: Mode,
) -> Result<ProblemInstance, BenchError> {
    if degree == 0 || degree > m || n == 0 {
        return Err(BenchError::Spec(format!("column degree {degree} invalid for {m} rows")));
    }
    if degree * n < m {
        return Err(BenchError::Spec(format!("{n} columns of degree {degree} cannot cover {m} rows")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|_| {
            sample(&mut rng, m, degree)
                .into_iter()
                .map(|r| (r, draw(&mut rng, value_range)))
                .collect()
        })
        .collect();
    let mut covered = vec![false; m];
    columns.iter().flatten().for_each(|&(r, _)| covered[r] = true);
    // swap an entry of a random column onto each uncovered row, keeping the
    // degree; only columns with a doubly covered row are eligible
    for j in 0..m {
        if covered[j] {
            continue;
        }
        let mut counts = vec![0usize; m];
        columns.iter().flatten().for_each(|&(r, _)| counts[r] += 1);
        let candidates: Vec<(usize, usize)> = columns
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().enumerate().map(move |(k, &(r, _))| (c, k, r)))
            .filter(|&(_, _, r)| counts[r] > 1)
            .map(|(c, k, _)| (c, k))
            .collect();
        let (c, k) = candidates[rng.gen_range(0..candidates.len())];
        columns[c][k].0 = j;
        covered[j] = true;
    }
    let a = SparseNonnegMatrix::from_columns(m, columns)?;
    Ok(ProblemInstance::new(a, mode)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub solver: String,
    pub eps: f64,
    pub seed: u64,
    /// Iterations until `f_μ ≤ (1+6ε)·opt` was first observed (the cap when
    /// never observed).
    pub iterations: u64,
    pub final_fmu: f64,
    pub wall_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSummary {
    pub solver: String,
    pub eps: f64,
    pub median_iterations: f64,
    pub reached: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingResult {
    pub opt: Vec<(f64, f64)>,
    pub rows: Vec<ScalingRow>,
    pub summary: Vec<ScalingSummary>,
    /// Least-squares slope of `log(median iterations)` against `log(1/ε)`.
    pub slope_accelerated: Option<f64>,
    pub slope_baseline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    /// Iteration cap as a multiple of the accelerated schedule length `T`.
    pub accelerated_cap_factor: f64,
    pub baseline_max_iters: u64,
    pub timing: bool,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            accelerated_cap_factor: 4.0,
            baseline_max_iters: 200_000,
            timing: false,
        }
    }
}

pub const CSV_HEADER: &str = "solver,eps,seed,iterations,final_fmu,wall_ms";

/// Iterations-to-target for the accelerated solver and the mirror-descent
/// baseline on a covering instance, for every `(ε, seed)`.
///
/// Both start from the same ε-independent cold start on the reduced
/// instance; the target uses the exact optimum of that instance.
pub fn scaling_experiment(
    inst: &ProblemInstance,
    eps_list: &[f64],
    seeds: &[u64],
    cfg: &ScalingConfig,
) -> Result<ScalingResult, BenchError> {
    if inst.mode() != Mode::Cover {
        return Err(BenchError::Spec("the scaling experiment runs on covering instances".into()));
    }
    let normalized = inst.normalize();
    let mut rows = Vec::new();
    let mut opts = Vec::new();
    for &eps in eps_list {
        let clamped = normalized.clamp_entries(eps)?;
        let red = ReducedInstance::reduce(clamped.matrix());
        let opt = exact_opt(red.matrix(), Mode::Cover, Some(red.caps()))?.opt_f64();
        opts.push((eps, opt));
        let target = (1.0 + 6.0 * eps) * opt;
        let obj = SmoothedObjective::with_eps(red.matrix(), Mode::Cover, eps)?;
        let start = init::cold_start_cover(&obj, &red, eps);
        let sched = schedule(obj.params(), red.reduced_n());

        for &seed in seeds {
            let t0 = Instant::now();
            let mut sc = SolverConfig::new(eps, seed);
            sc.target_fmu = Some(target);
            sc.max_iters = Some((sched.iterations as f64 * cfg.accelerated_cap_factor).ceil() as u64);
            sc.trace_stride = Some(red.reduced_n() as u64);
            let run = run_accelerated(&obj, &start.x_start, &sc)?;
            rows.push(ScalingRow {
                solver: "accelerated".into(),
                eps,
                seed,
                iterations: run.reached_target.unwrap_or(run.iterations),
                final_fmu: run.trace.last().map_or(f64::NAN, |t| t.f_mu),
                wall_ms: cfg.timing.then(|| t0.elapsed().as_millis() as u64),
            });
        }
        // the baseline is deterministic, so one run serves every seed
        let t0 = Instant::now();
        let b = baseline_mirror_descent(
            &obj,
            &start.x_start,
            &BaselineConfig::new(target, cfg.baseline_max_iters),
            0,
        );
        let wall_ms = cfg.timing.then(|| t0.elapsed().as_millis() as u64);
        for &seed in seeds {
            rows.push(ScalingRow {
                solver: "baseline".into(),
                eps,
                seed,
                iterations: b.iterations,
                final_fmu: b.final_fmu,
                wall_ms,
            });
        }
    }

    let mut summary = Vec::new();
    for solver in ["accelerated", "baseline"] {
        for &(eps, opt) in &opts {
            let target = (1.0 + 6.0 * eps) * opt;
            let runs: Vec<&ScalingRow> = rows.iter().filter(|r| r.solver == solver && r.eps == eps).collect();
            let its: Vec<f64> = runs.iter().map(|r| r.iterations as f64).collect();
            summary.push(ScalingSummary {
                solver: solver.into(),
                eps,
                median_iterations: median(&its),
                reached: runs.iter().filter(|r| r.final_fmu <= target).count(),
                runs: runs.len(),
            });
        }
    }
    let slope_for = |solver: &str| {
        let pts: Vec<(f64, f64)> = summary
            .iter()
            .filter(|s| s.solver == solver)
            .map(|s| ((1.0 / s.eps).ln(), s.median_iterations.max(1.0).ln()))
            .collect();
        loglog_slope(&pts)
    };
    Ok(ScalingResult {
        slope_accelerated: slope_for("accelerated"),
        slope_baseline: slope_for("baseline"),
        opt: opts,
        rows,
        summary,
    })
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len() / 2;
    if s.len() % 2 == 1 {
        s[k]
    } else {
        0.5 * (s[k - 1] + s[k])
    }
}

/// Least-squares slope through `(x, y)` points; `None` with fewer than two
/// distinct abscissae.
pub fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn rows_to_csv(rows: &[ScalingRow]) -> Result<String, BenchError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        return Ok(format!("{CSV_HEADER}\n"));
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Spec(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ScalingRow>, BenchError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<ScalingRow>, _>>()?)
}
