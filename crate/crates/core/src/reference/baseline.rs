//! Full-gradient truncated mirror descent on the same smoothed objective and
//! box, without the gradient-step coupling. The output is the running
//! average of the mirror iterates. The fixed step size is picked by a grid
//! search over powers of two.

use serde::Serialize;

use crate::smoothing::{truncate_gradient, SmoothedObjective};
use crate::solver::mirror_step;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    /// Stop once `f_μ` of the averaged iterate is at most this.
    pub target_fmu: f64,
    pub max_iters: u64,
    /// Step sizes `2^-k` for `k` in this range are tried.
    pub step_exponents: std::ops::RangeInclusive<i32>,
}

impl BaselineConfig {
    pub fn new(target_fmu: f64, max_iters: u64) -> Self {
        BaselineConfig {
            target_fmu,
            max_iters,
            step_exponents: -2..=16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    /// Full-gradient iterations used by the selected step size.
    pub iterations: u64,
    pub reached_target: bool,
    pub final_fmu: f64,
    pub step_size: f64,
    pub seed: u64,
    /// Averaged iterate.
    pub x: Vec<f64>,
}

/// Runs the baseline from `start` for every candidate step size and keeps the
/// one that reaches the target first (or ends lowest when none does). The
/// iteration is deterministic; `seed` is only echoed.
pub fn baseline_mirror_descent(
    obj: &SmoothedObjective<'_>,
    start: &[f64],
    cfg: &BaselineConfig,
    seed: u64,
) -> BaselineReport {
    let mut best: Option<BaselineReport> = None;
    for k in cfg.step_exponents.clone() {
        let eta = 2f64.powi(-k);
        let budget = match &best {
            Some(b) if b.reached_target => b.iterations,
            _ => cfg.max_iters,
        };
        let run = run_fixed_step(obj, start, eta, cfg.target_fmu, budget, seed);
        let better = match &best {
            None => true,
            Some(b) => match (run.reached_target, b.reached_target) {
                (true, false) => true,
                (true, true) => run.iterations < b.iterations,
                (false, false) => run.final_fmu < b.final_fmu,
                (false, true) => false,
            },
        };
        if better {
            best = Some(run);
        }
    }
    best.expect("at least one step size")
}

/// Mirror descent with step `η`: `z_i ← clamp(z_i − η ξ_i/‖A_{:i}‖_∞, 0, 3/‖A_{:i}‖_∞)`.
pub fn run_fixed_step(
    obj: &SmoothedObjective<'_>,
    start: &[f64],
    eta: f64,
    target: f64,
    max_iters: u64,
    seed: u64,
) -> BaselineReport {
    let a = obj.matrix();
    let n = a.ncols();
    let norms = a.col_inf_norms();
    let mut z = start.to_vec();
    let mut sum = vec![0.0; n];
    let mut ax_sum = vec![0.0; a.nrows()];
    let mut avg = start.to_vec();
    let mut fmu = obj.f_mu(&avg, None);
    let mut k = 0u64;
    let mut reached = fmu <= target;
    while !reached && k < max_iters {
        let az = a.mul_vec(&z);
        let g: Vec<f64> = (0..n).map(|i| truncate_gradient(obj.grad_coord(i, &az))).collect();
        for i in 0..n {
            z[i] = mirror_step(z[i], g[i], eta, norms[i], obj.box_hi()[i]);
            sum[i] += z[i];
        }
        k += 1;
        for (s, v) in ax_sum.iter_mut().zip(a.mul_vec(&z)) {
            *s += v;
        }
        let inv = 1.0 / k as f64;
        avg.iter_mut().zip(&sum).for_each(|(v, s)| *v = s * inv);
        let ax_avg: Vec<f64> = ax_sum.iter().map(|s| s * inv).collect();
        fmu = obj.f_mu(&avg, Some(&ax_avg));
        reached = fmu <= target;
    }
    BaselineReport {
        iterations: k,
        reached_target: reached,
        final_fmu: fmu,
        step_size: eta,
        seed,
        x: avg,
    }
}
