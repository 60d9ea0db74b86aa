#![allow(dead_code)]

use paklo::bench::{generate, GenSpec};
use paklo::instance::{Mode, ProblemInstance};
use paklo::reduction::ReducedInstance;
use paklo::reference::lp::exact_opt;
use paklo::smoothing::SmoothedObjective;
use paklo::solver::{SolverConfig, SolverState, schedule};
use paklo::reference::eager::eager_replay;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Slack for the numeric smoothing inequalities.
pub const INEQ_SLACK: f64 = 1e-9;

pub fn random_instance(seed: u64, max_dim: usize, density_lo: f64, range: (f64, f64), mode: Mode) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    // redraw shapes whose density is too low to cover every row and column
    loop {
        let m = rng.gen_range(2..=max_dim);
        let n = rng.gen_range(2..=max_dim);
        let density = rng.gen_range(density_lo..=1.0);
        let spec = GenSpec {
            m,
            n,
            density,
            value_range: range,
            seed,
        };
        if let Ok(inst) = generate(&spec, mode) {
            return inst;
        }
    }
}

/// Normalized, clamped and reduced covering instance with its exact optimum
/// and an optimal reduced point (within the caps).
pub struct ReducedCase {
    pub red: ReducedInstance,
    pub eps: f64,
    pub opt: f64,
    pub x_star: Vec<f64>,
}

pub fn reduced_case(inst: &ProblemInstance, eps: f64) -> ReducedCase {
    let clamped = inst.normalize().clamp_entries(eps).expect("clamping succeeds");
    let red = ReducedInstance::reduce(clamped.matrix());
    let lp = exact_opt(red.matrix(), Mode::Cover, Some(red.caps())).expect("oracle succeeds");
    ReducedCase {
        eps,
        opt: lp.opt_f64(),
        x_star: lp.x_f64(),
        red,
    }
}

/// Mixture of sample points: uniform in the box, perturbed scalings of the
/// optimum, and random directions scaled to a target coverage.
pub fn sample_points(obj: &SmoothedObjective<'_>, x_star: &[f64], count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let a = obj.matrix();
    let n = a.ncols();
    (0..count)
        .map(|k| match k % 3 {
            0 => obj.box_hi().iter().map(|&hi| rng.gen_range(0.0..=hi)).collect(),
            1 => {
                let s = rng.gen_range(0.85..1.3);
                x_star
                    .iter()
                    .zip(obj.box_hi())
                    .map(|(&v, &hi)| (v * s * rng.gen_range(0.9..1.1) + rng.gen_range(0.0..0.02) * hi).min(hi))
                    .collect()
            }
            _ => {
                let d: Vec<f64> = (0..n).map(|i| rng.gen_range(0.0..=obj.box_hi()[i])).collect();
                let lo = a.mul_vec(&d).into_iter().fold(f64::INFINITY, f64::min);
                let target = rng.gen_range(0.9..1.2);
                d.iter()
                    .zip(obj.box_hi())
                    .map(|(&v, &hi)| (v * target / lo).min(hi))
                    .collect()
            }
        })
        .collect()
}

#[derive(Debug, Default, Clone)]
pub struct InequalityTally {
    pub checks: usize,
    pub failures: Vec<String>,
    pub near_optimal_samples: usize,
    pub lipschitz_inner_samples: usize,
    pub lipschitz_descent_samples: usize,
}

impl InequalityTally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Smoothing inequalities (value bounds, feasibility of near-optimal
/// points, recovery by 1/(1−ε)) and the two local-Lipschitz inequalities.
pub fn smoothing_suite(case: &ReducedCase, samples: usize, seed: u64, tally: &mut InequalityTally) {
    let a = case.red.matrix();
    let eps = case.eps;
    let opt = case.opt;
    let obj = SmoothedObjective::with_eps(a, Mode::Cover, eps).unwrap();
    let lip = obj.params().lipschitz;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // upper bound at the scaled optimum
    let u: Vec<f64> = case.x_star.iter().map(|v| v * (1.0 + eps / 2.0)).collect();
    let fu = obj.f_mu(&u, None);
    tally.check(fu <= (1.0 + eps) * opt + INEQ_SLACK, || format!("upper bound at scaled optimum: f(u*) = {fu} > (1+eps) opt = {}", (1.0 + eps) * opt));

    for x in sample_points(&obj, &case.x_star, samples, &mut rng) {
        let ax = a.mul_vec(&x);
        let f = obj.f_mu(&x, Some(&ax));
        // lower bound
        tally.check(f >= (1.0 - eps) * opt - INEQ_SLACK, || format!("lower bound: f = {f} < (1-eps) opt"));
        if f <= 2.0 * opt {
            tally.near_optimal_samples += 1;
            // near-optimal points nearly cover
            let lo = ax.iter().copied().fold(f64::INFINITY, f64::min);
            tally.check(lo >= 1.0 - eps - INEQ_SLACK, || format!("near-optimal coverage: min Ax = {lo} with f = {f}"));
            // rescaling by 1/(1-eps) recovers feasibility
            let rec: f64 = ax.iter().map(|v| v / (1.0 - eps)).fold(f64::INFINITY, f64::min);
            let cost: f64 = x.iter().sum::<f64>() / (1.0 - eps);
            tally.check(rec >= 1.0 - INEQ_SLACK && cost <= f / (1.0 - eps) + INEQ_SLACK, || {
                format!("recovery: rescaled min Ax = {rec}, cost {cost}, f/(1-eps) = {}", f / (1.0 - eps))
            });
        }

        // local Lipschitz statements on a random coordinate
        let i = rng.gen_range(0..a.ncols());
        let g = obj.grad_coord(i, &ax);
        if !g.is_finite() {
            continue;
        }
        let norm = a.col_inf_norm(i);
        let radius = 1.0 / (lip * norm);
        let shifted = |gamma: f64| {
            let mut y = x.clone();
            y[i] += gamma;
            obj.grad_coord(i, &a.mul_vec(&y))
        };
        if g > -1.0 && g < 1.0 {
            let gamma = rng.gen_range(-radius..=radius).max(-x[i]);
            let g2 = shifted(gamma);
            if g2.is_finite() {
                tally.lipschitz_inner_samples += 1;
                tally.check((g - g2).abs() <= lip * norm * gamma.abs() + INEQ_SLACK, || {
                    format!("lipschitz inner: |{g} - {g2}| > L|A_i| |{gamma}|")
                });
            }
        } else if g <= -1.0 {
            let gamma = rng.gen_range(0.0..=radius);
            let g2 = shifted(gamma);
            if g2.is_finite() {
                tally.lipschitz_descent_samples += 1;
                tally.check(g2 <= (1.0 - lip * norm / 2.0 * gamma) * g + INEQ_SLACK, || {
                    format!("lipschitz descent: {g2} > (1 - L|A_i|gamma/2) {g}")
                });
            }
        }
    }
}

/// Under-covered points with strongly negative gradients, so the second
/// Lipschitz statement is exercised.
pub fn undercovered_suite(case: &ReducedCase, samples: usize, seed: u64, tally: &mut InequalityTally) {
    let a = case.red.matrix();
    let obj = SmoothedObjective::with_eps(a, Mode::Cover, case.eps).unwrap();
    let lip = obj.params().lipschitz;
    let mu = obj.mu();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        // shrink x* so some rows sit a few μ below coverage
        let s = 1.0 - rng.gen_range(1.0..30.0) * mu;
        let x: Vec<f64> = case.x_star.iter().map(|v| v * s).collect();
        let ax = a.mul_vec(&x);
        let i = rng.gen_range(0..a.ncols());
        let g = obj.grad_coord(i, &ax);
        if !(g.is_finite() && g <= -1.0) {
            continue;
        }
        let radius = 1.0 / (lip * a.col_inf_norm(i));
        let gamma = rng.gen_range(0.0..=radius);
        let mut y = x.clone();
        y[i] += gamma;
        let g2 = obj.grad_coord(i, &a.mul_vec(&y));
        if !g2.is_finite() {
            continue;
        }
        tally.lipschitz_descent_samples += 1;
        let bound = (1.0 - lip * a.col_inf_norm(i) / 2.0 * gamma) * g + INEQ_SLACK;
        tally.check(g2 <= bound, || format!("lipschitz descent: {g2} > {bound}"));
    }
}

/// Largest relative deviation between lazy and dense iterates over
/// `iterations` steps, and whether the sampled coordinates agreed.
pub fn lazy_eager_deviation(obj: &SmoothedObjective<'_>, start: &[f64], seed: u64, iterations: u64) -> (f64, bool) {
    let eager = eager_replay(obj, start, seed, iterations);
    let sched = schedule(obj.params(), obj.matrix().ncols());
    let mut state = SolverState::new(obj, start, &sched, seed);
    let refresh = obj.matrix().ncols() as u64;
    let rel = |a: &[f64], b: &[f64]| {
        let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let s = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        d / s.max(f64::MIN_POSITIVE)
    };
    let mut worst = 0.0f64;
    let mut same_coords = true;
    for it in eager.iter().skip(1) {
        let info = state.step(obj, &sched);
        if state.iteration().is_multiple_of(refresh) {
            state.refresh(obj).expect("no drift");
        }
        same_coords &= Some(info.coordinate) == it.coordinate;
        worst = worst.max(rel(&state.y(), &it.y)).max(rel(state.z(), &it.z));
    }
    (worst, same_coords)
}

pub fn solver_config(eps: f64, seed: u64) -> SolverConfig {
    SolverConfig::new(eps, seed)
}
