//! Dense restatement of the accelerated iteration. Every iterate is
//! materialized and `Ax_k` is recomputed from scratch each step.

use crate::smoothing::{truncate_gradient, SmoothedObjective};
use crate::solver::{mirror_step, schedule, CoordinateSampler};

#[derive(Debug, Clone, PartialEq)]
pub struct EagerIterate {
    pub iteration: u64,
    /// Coordinate sampled at this iteration (`None` for the start).
    pub coordinate: Option<usize>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// Runs `iterations` steps from `start`, drawing coordinates exactly as the
/// lazy solver does for the same seed. Returns the start followed by one
/// entry per step.
pub fn eager_replay(obj: &SmoothedObjective<'_>, start: &[f64], seed: u64, iterations: u64) -> Vec<EagerIterate> {
    let a = obj.matrix();
    let n = a.ncols();
    let sched = schedule(obj.params(), n);
    let lipschitz = obj.params().lipschitz;
    let tau = sched.tau;
    let mut sampler = CoordinateSampler::new(seed);
    let mut alpha = sched.alpha0;
    let mut y = start.to_vec();
    let mut z = start.to_vec();
    let mut out = Vec::with_capacity(iterations as usize + 1);
    out.push(EagerIterate {
        iteration: 0,
        coordinate: None,
        x: start.to_vec(),
        y: y.clone(),
        z: z.clone(),
    });
    for k in 1..=iterations {
        alpha /= 1.0 - tau;
        let x: Vec<f64> = z.iter().zip(&y).map(|(&zi, &yi)| tau * zi + (1.0 - tau) * yi).collect();
        let ax = a.mul_vec(&x);
        let i = sampler.sample(n);
        let xi = truncate_gradient(obj.grad_coord(i, &ax));
        let n_alpha = n as f64 * alpha;
        let zi = mirror_step(z[i], xi, n_alpha, a.col_inf_norm(i), obj.box_hi()[i]);
        let delta = zi - z[i];
        z[i] = zi;
        y = x.clone();
        y[i] += delta / (n_alpha * lipschitz);
        out.push(EagerIterate {
            iteration: k,
            coordinate: Some(i),
            x,
            y: y.clone(),
            z: z.clone(),
        });
    }
    out
}
