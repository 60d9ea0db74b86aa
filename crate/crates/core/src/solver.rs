//! Accelerated stochastic coordinate descent with linear coupling.
//!
//! Each iteration picks a coordinate uniformly at random, truncates its
//! gradient to `[−1, 1]`, takes a mirror step on `z` in the `A`-norm and a
//! gradient step on `y`, and couples the two through
//! `x_k = τ z_{k−1} + (1 − τ) y_{k−1}`.
//!
//! The iterates are never materialized. [`SolverState`] keeps `z`, `Az`, an
//! auxiliary `y′` with `Ay′`, and two scalars `B1`, `B2` such that
//! `y = B1·z + B2·y′`; one iteration then touches only the chosen column.

use std::time::Instant;

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::init::{self, InitError, StartMethod, StartPoint};
use crate::instance::{InstanceError, Mode, ProblemInstance};
use crate::reduction::ReducedInstance;
use crate::smoothing::{truncate_gradient, ParamError, SmoothedObjective, SmoothingParams};

/// Cache drift above this (relative) is logged at refresh.
pub const DRIFT_WARN: f64 = 1e-9;
/// Cache drift above this (relative) is a state-corruption error.
pub const DRIFT_FATAL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error("state corruption at iteration {iteration}: {what} drifted by {drift:e} (relative)")]
    StateCorruption {
        iteration: u64,
        what: &'static str,
        drift: f64,
    },
    #[error("iterate left the feasible box at iteration {iteration} (coordinate {coordinate}, value {value:e})")]
    OutOfBox {
        iteration: u64,
        coordinate: usize,
        value: f64,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub seed: u64,
    /// Iterations between full recomputations of `Az` and `Ay′`; defaults to
    /// the working column count.
    pub refresh_interval: Option<u64>,
    /// Replaces the iteration count `T` from the schedule.
    pub max_iters: Option<u64>,
    /// Spacing of trace checkpoints; defaults to `max(1, T/1000)`.
    pub trace_stride: Option<u64>,
    /// Stop at the first checkpoint whose smoothed objective is at most this.
    pub target_fmu: Option<f64>,
}

impl SolverConfig {
    pub fn new(eps: f64, seed: u64) -> Self {
        SolverConfig {
            eps,
            seed,
            refresh_interval: None,
            max_iters: None,
            trace_stride: None,
            target_fmu: None,
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(SolverError::Params(ParamError::Eps(self.eps)));
        }
        if self.refresh_interval == Some(0) {
            return Err(SolverError::Config("refresh interval must be at least 1".into()));
        }
        if self.trace_stride == Some(0) {
            return Err(SolverError::Config("trace stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Coupling weight `τ = 1/(8nL)`.
    pub tau: f64,
    /// `α₀ = 1/(nL)`; afterwards `α_k = α_{k−1}/(1 − τ)`.
    pub alpha0: f64,
    /// `T = ⌈8nL ln(1/ε)⌉`.
    pub iterations: u64,
}

pub fn schedule(params: &SmoothingParams, n: usize) -> Schedule {
    let nl = n as f64 * params.lipschitz;
    Schedule {
        tau: 1.0 / (8.0 * nl),
        alpha0: 1.0 / nl,
        iterations: (8.0 * nl * (1.0 / params.eps).ln()).ceil() as u64,
    }
}

/// Closed form of the mirror step on coordinate `i`:
/// `clamp(z_i − nα·ξ/‖A_{:i}‖_∞, 0, 3/‖A_{:i}‖_∞)`.
#[inline]
pub fn mirror_step(z_i: f64, xi: f64, n_alpha: f64, col_norm: f64, box_hi: f64) -> f64 {
    (z_i - n_alpha * xi / col_norm).clamp(0.0, box_hi)
}

/// Uniform coordinate sampler; shared with the dense reference replay so
/// both draw identical sequences from the same seed.
#[derive(Debug, Clone)]
pub struct CoordinateSampler(ChaCha8Rng);

impl CoordinateSampler {
    pub fn new(seed: u64) -> Self {
        CoordinateSampler(ChaCha8Rng::seed_from_u64(seed))
    }

    #[inline]
    pub fn sample(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }
}

/// What one iteration did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub coordinate: usize,
    pub gradient: f64,
    pub xi: f64,
    /// Change of `z` on the chosen coordinate.
    pub delta: f64,
    /// `nα_k` used by the mirror step.
    pub n_alpha: f64,
}

/// Drift found by a refresh, relative to `1 + ‖cache‖_∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    pub az: f64,
    pub ay: f64,
}

/// One iterate in lazy form.
#[derive(Debug, Clone)]
pub struct SolverState {
    k: u64,
    alpha: f64,
    z: Vec<f64>,
    az: Vec<f64>,
    yprime: Vec<f64>,
    ay: Vec<f64>,
    b1: f64,
    b2: f64,
    sampler: CoordinateSampler,
    touches: u64,
}

impl SolverState {
    /// `x₀ = y₀ = z₀ = start`, `B1 = 0`, `B2 = 1`.
    pub fn new(obj: &SmoothedObjective<'_>, start: &[f64], sched: &Schedule, seed: u64) -> Self {
        let a = obj.matrix();
        assert_eq!(start.len(), a.ncols(), "start point has wrong dimension");
        let az = a.mul_vec(start);
        SolverState {
            k: 0,
            alpha: sched.alpha0,
            z: start.to_vec(),
            ay: az.clone(),
            az,
            yprime: start.to_vec(),
            b1: 0.0,
            b2: 1.0,
            sampler: CoordinateSampler::new(seed),
            touches: 2 * a.nnz() as u64,
        }
    }

    pub fn iteration(&self) -> u64 {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn coefficients(&self) -> (f64, f64) {
        (self.b1, self.b2)
    }

    /// Element touches so far (matrix entries and vector coordinates read or
    /// written by the iteration, refresh and checkpoint code).
    pub fn touches(&self) -> u64 {
        self.touches
    }

    /// `y = B1·z + B2·y′`.
    pub fn y(&self) -> Vec<f64> {
        self.z
            .iter()
            .zip(&self.yprime)
            .map(|(&z, &yp)| self.b1 * z + self.b2 * yp)
            .collect()
    }

    /// `Ay = B1·az + B2·ay`.
    pub fn ay_reconstructed(&self) -> Vec<f64> {
        self.az
            .iter()
            .zip(&self.ay)
            .map(|(&z, &y)| self.b1 * z + self.b2 * y)
            .collect()
    }

    /// One iteration.
    pub fn step(&mut self, obj: &SmoothedObjective<'_>, sched: &Schedule) -> StepInfo {
        let a = obj.matrix();
        let n = a.ncols();
        let tau = sched.tau;
        self.k += 1;
        self.alpha /= 1.0 - tau;
        let i = self.sampler.sample(n);

        // (Ax_k)_j = (τ + (1−τ)B1)·az_j + (1−τ)B2·ay_j
        let cz = tau + (1.0 - tau) * self.b1;
        let cy = (1.0 - tau) * self.b2;
        let (az, ay) = (&self.az, &self.ay);
        let gradient = obj.grad_coord_with(i, |j| cz * az[j] + cy * ay[j]);
        let xi = truncate_gradient(gradient);

        let n_alpha = n as f64 * self.alpha;
        let col_norm = a.col_inf_norm(i);
        let z_new = mirror_step(self.z[i], xi, n_alpha, col_norm, obj.box_hi()[i]);
        let delta = z_new - self.z[i];

        self.b1 = cz;
        self.b2 = cy;
        let nnz = a.col_nnz(i) as u64;
        self.touches += 1 + nnz;
        if delta != 0.0 {
            let lipschitz = obj.params().lipschitz;
            debug_assert!(
                delta.abs()
                    <= n_alpha * xi.abs() / col_norm * (1.0 + 1e-12)
                        + 4.0 * f64::EPSILON * z_new.abs().max(self.z[i].abs()),
                "gradient step left the local region"
            );
            let coef = delta * (1.0 / (n_alpha * lipschitz) - self.b1) / self.b2;
            self.z[i] = z_new;
            self.yprime[i] += coef;
            let (rows, vals) = a.col(i);
            for (&r, &v) in rows.iter().zip(vals) {
                self.az[r] += delta * v;
                self.ay[r] += coef * v;
            }
            self.touches += 2 * nnz;
        }
        StepInfo {
            coordinate: i,
            gradient,
            xi,
            delta,
            n_alpha,
        }
    }

    /// Recomputes `Az` and `Ay′` from scratch, returning the drift that the
    /// incremental updates had accumulated.
    pub fn refresh(&mut self, obj: &SmoothedObjective<'_>) -> Result<Drift, SolverError> {
        let a = obj.matrix();
        let az = a.mul_vec(&self.z);
        let ay = a.mul_vec(&self.yprime);
        self.touches += 2 * (a.nnz() + a.ncols()) as u64;
        let drift = Drift {
            az: relative_drift(&az, &self.az),
            ay: relative_drift(&ay, &self.ay),
        };
        for (what, d) in [("Az", drift.az), ("Ay'", drift.ay)] {
            if !(d <= DRIFT_FATAL) {
                return Err(SolverError::StateCorruption {
                    iteration: self.k,
                    what,
                    drift: d,
                });
            }
            if d > DRIFT_WARN {
                warn!("iteration {}: {what} cache drift {d:e} exceeds {DRIFT_WARN:e}", self.k);
            }
        }
        self.az = az;
        self.ay = ay;
        Ok(drift)
    }
}

fn relative_drift(exact: &[f64], cached: &[f64]) -> f64 {
    let scale = 1.0 + cached.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = exact
        .iter()
        .zip(cached)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    diff / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    /// Smoothed objective at `y_k` (working instance).
    pub f_mu: f64,
    /// `1ᵀy_k` on the working instance.
    pub objective: f64,
    /// `min_j (Ay_k)_j − 1` (covering) or `1 − max_j (Ay_k)_j` (packing).
    pub residual: f64,
}

/// Result of running the iteration on a working instance.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub y: Vec<f64>,
    pub iterations: u64,
    pub schedule: Schedule,
    pub trace: Vec<TracePoint>,
    pub touches: u64,
    /// Iteration at which `target_fmu` was first met, if it was.
    pub reached_target: Option<u64>,
}

/// Runs the accelerated iteration from `start` on the working objective.
pub fn run_accelerated(
    obj: &SmoothedObjective<'_>,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<RunOutput, SolverError> {
    cfg.validate()?;
    let a = obj.matrix();
    let n = a.ncols();
    let sched = schedule(obj.params(), n);
    let total = cfg.max_iters.unwrap_or(sched.iterations);
    let stride = cfg.trace_stride.unwrap_or((total / 1000).max(1));
    let refresh_every = cfg.refresh_interval.unwrap_or(n as u64).max(1);
    debug!(
        "run: n = {n}, m = {}, mu = {:e}, L = {:.3}, tau = {:e}, T = {}, total = {total}",
        a.nrows(),
        obj.mu(),
        obj.params().lipschitz,
        sched.tau,
        sched.iterations
    );

    let mut state = SolverState::new(obj, start, &sched, cfg.seed);
    let mut trace = Vec::with_capacity((total / stride + 2) as usize);
    let mut reached_target = None;

    let checkpoint = |state: &mut SolverState, trace: &mut Vec<TracePoint>| -> Result<f64, SolverError> {
        let y = state.y();
        let ay = state.ay_reconstructed();
        state.touches += 2 * (n + a.nrows()) as u64;
        if let Some(c) = (0..n).find(|&c| !(y[c] >= -1e-9 * obj.box_hi()[c] && y[c] <= obj.box_hi()[c] * (1.0 + 1e-9))) {
            return Err(SolverError::OutOfBox {
                iteration: state.k,
                coordinate: c,
                value: y[c],
            });
        }
        let point = TracePoint {
            iteration: state.k,
            f_mu: obj.f_mu(&y, Some(&ay)),
            objective: y.iter().sum(),
            residual: residual(obj.mode(), &ay),
        };
        trace.push(point);
        Ok(point.f_mu)
    };

    let f0 = checkpoint(&mut state, &mut trace)?;
    if cfg.target_fmu.is_some_and(|t| f0 <= t) {
        reached_target = Some(0);
    }
    while reached_target.is_none() && state.k < total {
        state.step(obj, &sched);
        if state.k.is_multiple_of(refresh_every) {
            state.refresh(obj)?;
        }
        if state.k.is_multiple_of(stride) || state.k == total {
            let f = checkpoint(&mut state, &mut trace)?;
            if cfg.target_fmu.is_some_and(|t| f <= t) {
                reached_target = Some(state.k);
            }
        }
    }
    // final refresh keeps the reported iterate consistent with exact products
    state.refresh(obj)?;
    Ok(RunOutput {
        y: state.y(),
        iterations: state.k,
        schedule: sched,
        trace,
        touches: state.touches,
        reached_target,
    })
}

fn residual(mode: Mode, ax: &[f64]) -> f64 {
    match mode {
        Mode::Cover => ax.iter().copied().fold(f64::INFINITY, f64::min) - 1.0,
        Mode::Pack => 1.0 - ax.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Output of [`solve`], in the variable space of the input instance.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub mode: Mode,
    pub eps: f64,
    pub seed: u64,
    pub solution: Vec<f64>,
    pub objective: f64,
    /// `min_j (Ax)_j − 1` (covering) or `1 − max_j (Ay)_j` (packing) on the
    /// input matrix.
    pub feasibility_residual: f64,
    pub iterations: u64,
    /// Iteration budget `T` from the schedule.
    pub scheduled_iterations: u64,
    /// Column count of the working instance the iteration ran on.
    pub reduced_n: usize,
    pub working_m: usize,
    pub scale: f64,
    pub fixup_count: usize,
    /// Uniform factor applied at the end to enforce feasibility exactly
    /// (1 when none was needed).
    pub final_rescale: f64,
    pub start_method: Option<StartMethod>,
    /// Element touches over the whole solve, including initialization.
    pub touches: u64,
    pub trace: Vec<TracePoint>,
}

/// Full pipeline: normalize, then for covering clamp and reduce, find a start
/// point, iterate, and map the result back to the input's variable space.
pub fn solve(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    let started = Instant::now();
    let eps = cfg.eps;
    let normalized = inst.normalize();
    let report = match inst.mode() {
        Mode::Cover => {
            let clamped = normalized.clamp_entries(eps)?;
            if clamped.matrix().nrows() == 0 {
                // every constraint was dropped; the fixups alone are feasible
                let x = clamped.unscale(&clamped.apply_fixups(&vec![0.0; clamped.matrix().ncols()]));
                finish(inst, cfg, x, &clamped, 0, 0, 0, None, 0, Vec::new(), 0)
            } else {
                let red = ReducedInstance::reduce(clamped.matrix());
                let obj = SmoothedObjective::with_eps(red.matrix(), Mode::Cover, eps)?;
                let approx = init::two_approx_cover(&red)?;
                let start = init::make_start_cover(&obj, &approx.x, eps);
                let run = run_accelerated(&obj, &start.x_start, cfg)?;
                let xbar: Vec<f64> = run.y.iter().map(|v| v / (1.0 - eps)).collect();
                let x = clamped.unscale(&clamped.apply_fixups(&red.lift_solution(&xbar)));
                finish(
                    inst,
                    cfg,
                    x,
                    &clamped,
                    run.iterations,
                    run.schedule.iterations,
                    red.reduced_n(),
                    Some(start.method),
                    run.touches + approx.touches,
                    run.trace,
                    red.matrix().nrows(),
                )
            }
        }
        Mode::Pack => {
            let obj = SmoothedObjective::with_eps(normalized.matrix(), Mode::Pack, eps)?;
            let start: StartPoint = init::make_start_pack(&obj);
            let run = run_accelerated(&obj, &start.x_start, cfg)?;
            let y = normalized.unscale(&run.y);
            finish(
                inst,
                cfg,
                y,
                &normalized,
                run.iterations,
                run.schedule.iterations,
                normalized.matrix().ncols(),
                Some(start.method),
                run.touches,
                run.trace,
                normalized.matrix().nrows(),
            )
        }
    };
    info!(
        "{} solve: objective {:.6}, residual {:e}, {} iterations, {} ms",
        inst.mode(),
        report.objective,
        report.feasibility_residual,
        report.iterations,
        started.elapsed().as_millis()
    );
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    mut x: Vec<f64>,
    working: &ProblemInstance,
    iterations: u64,
    scheduled_iterations: u64,
    reduced_n: usize,
    start_method: Option<StartMethod>,
    touches: u64,
    trace: Vec<TracePoint>,
    working_m: usize,
) -> SolveReport {
    let a = inst.matrix();
    let ax = a.mul_vec(&x);
    let final_rescale = match inst.mode() {
        Mode::Cover => {
            let lo = ax.iter().copied().fold(f64::INFINITY, f64::min);
            if lo < 1.0 && lo > 0.0 {
                1.0 / lo
            } else {
                1.0
            }
        }
        Mode::Pack => {
            let hi = ax.iter().copied().fold(0.0f64, f64::max);
            1.0 / hi.max(1.0)
        }
    };
    if final_rescale != 1.0 {
        debug!("final rescale by {final_rescale}");
        x.iter_mut().for_each(|v| *v *= final_rescale);
    }
    let ax = a.mul_vec(&x);
    SolveReport {
        mode: inst.mode(),
        eps: cfg.eps,
        seed: cfg.seed,
        objective: x.iter().sum(),
        feasibility_residual: residual(inst.mode(), &ax),
        solution: x,
        iterations,
        scheduled_iterations,
        reduced_n,
        working_m,
        scale: working.scale(),
        fixup_count: working.fixups().len(),
        final_rescale,
        start_method,
        touches,
        trace,
    }
}
