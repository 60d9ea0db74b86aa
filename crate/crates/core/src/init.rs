//! Starting points.
//!
//! Covering runs begin from `(1 + ε/2)·x#` where `x#` is a 2-approximate
//! solution of the reduced covering LP. It comes from a multiplicative-weights
//! packing/covering primal-dual loop that stops once its feasible covering
//! candidate costs at most twice its feasible packing certificate. Packing
//! runs begin at the origin.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduction::ReducedInstance;
use crate::smoothing::SmoothedObjective;

/// Weight growth rate of the multiplicative-weights loop.
const MW_RATE: f64 = 0.1;
const MW_MAX_ITERS: u64 = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitError {
    #[error("row {0} of the reduced matrix has no entries")]
    EmptyRow(usize),
    #[error("2-approximation did not converge within {0} iterations")]
    NoConvergence(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMethod {
    /// Scaled 2-approximate covering solution.
    TwoApprox,
    /// Scaled per-column cover that ignores other columns.
    Cold,
    /// The origin.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartPoint {
    pub x_start: Vec<f64>,
    /// `f_μ(x_start)`.
    pub f_mu_bound: f64,
    pub method: StartMethod,
}

impl StartPoint {
    fn new(obj: &SmoothedObjective<'_>, x_start: Vec<f64>, method: StartMethod) -> Self {
        StartPoint {
            f_mu_bound: obj.f_mu(&x_start, None),
            x_start,
            method,
        }
    }
}

/// A covering solution on the reduced matrix with a dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoApprox {
    /// Feasible for `Āx ≥ 1`, within the per-copy caps.
    pub x: Vec<f64>,
    /// `1ᵀx`.
    pub upper: f64,
    /// Value of a feasible packing solution; a lower bound on the optimum.
    pub lower: f64,
    pub iterations: u64,
    pub touches: u64,
}

/// Multiplicative-weights 2-approximation of `min 1ᵀx, Āx ≥ 1`.
pub fn two_approx_cover(red: &ReducedInstance) -> Result<TwoApprox, InitError> {
    let a = red.matrix();
    let (m, n) = (a.nrows(), a.ncols());
    let at = a.transpose();
    let row_max = a.row_maxes();
    if let Some(j) = (0..m).find(|&j| at.col_nnz(j) == 0) {
        return Err(InitError::EmptyRow(j));
    }

    let mut w = vec![1.0; n];
    let mut w_sum = n as f64;
    let mut aw = a.mul_vec(&w);
    let mut y = vec![0.0; m];
    let mut y_sum = 0.0;
    let mut aty = vec![0.0; n];
    let mut aty_max = 0.0f64;
    let mut touches = (2 * a.nnz()) as u64;

    let mut best_p = f64::INFINITY;
    let mut best_w = w.clone();
    let mut best_d = 0.0f64;
    let mut iterations = 0u64;
    loop {
        let (jmin, awmin) = aw
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (j, v)| if v < b.1 { (j, v) } else { b });
        touches += m as u64;
        let p = w_sum / awmin;
        if p < best_p {
            best_p = p;
            best_w.clone_from(&w);
            best_w.iter_mut().for_each(|v| *v /= awmin);
            touches += n as u64;
        }
        if aty_max > 0.0 {
            best_d = best_d.max(y_sum / aty_max);
        }
        if best_p <= 2.0 * best_d {
            break;
        }
        if iterations >= MW_MAX_ITERS {
            return Err(InitError::NoConvergence(iterations));
        }
        iterations += 1;

        let step = 1.0 / row_max[jmin];
        y[jmin] += step;
        y_sum += step;
        let (cols, vals) = at.col(jmin);
        for (&i, &v) in cols.iter().zip(vals) {
            aty[i] += v * step;
            aty_max = aty_max.max(aty[i]);
            let grow = w[i] * MW_RATE * v * step;
            w[i] += grow;
            w_sum += grow;
            let (rows, avals) = a.col(i);
            for (&r, &av) in rows.iter().zip(avals) {
                aw[r] += grow * av;
            }
            touches += 2 + rows.len() as u64;
        }
        if w_sum > 1e100 {
            let s = 1.0 / w_sum;
            w.iter_mut().for_each(|v| *v *= s);
            aw.iter_mut().for_each(|v| *v *= s);
            w_sum = 1.0;
            touches += (n + m) as u64;
        }
    }

    // lift and re-project onto the capped copies, then restore exact
    // feasibility lost to rounding
    let mut x = red.project_solution(&red.lift_solution(&best_w));
    let ax = a.mul_vec(&x);
    let lo = ax.iter().copied().fold(f64::INFINITY, f64::min);
    if lo < 1.0 {
        x.iter_mut().for_each(|v| *v /= lo);
    }
    touches += (2 * a.nnz() + 3 * n) as u64;
    Ok(TwoApprox {
        upper: x.iter().sum(),
        x,
        lower: best_d,
        iterations,
        touches,
    })
}

/// `x_start = (1 + ε/2)·x#`, clipped to the box.
pub fn make_start_cover(obj: &SmoothedObjective<'_>, x_sharp: &[f64], eps: f64) -> StartPoint {
    StartPoint::new(obj, scale_into_box(obj, x_sharp, 1.0 + eps / 2.0), StartMethod::TwoApprox)
}

/// A start that does not depend on `ε` beyond the `(1 + ε/2)` factor:
/// `x_i = min(1, 1/colmin_i)` on a normalized matrix, projected to the copies.
/// Feasible because every row has an entry of at least 1.
pub fn cold_start_cover(obj: &SmoothedObjective<'_>, red: &ReducedInstance, eps: f64) -> StartPoint {
    let x: Vec<f64> = red.col_min().iter().map(|&c| (1.0 / c).min(1.0)).collect();
    let x_start = scale_into_box(obj, &red.project_solution(&x), 1.0 + eps / 2.0);
    StartPoint::new(obj, x_start, StartMethod::Cold)
}

pub fn make_start_pack(obj: &SmoothedObjective<'_>) -> StartPoint {
    StartPoint::new(obj, vec![0.0; obj.matrix().ncols()], StartMethod::Zero)
}

fn scale_into_box(obj: &SmoothedObjective<'_>, x: &[f64], factor: f64) -> Vec<f64> {
    x.iter()
        .zip(obj.box_hi())
        .map(|(&v, &hi)| (v * factor).min(hi))
        .collect()
}
