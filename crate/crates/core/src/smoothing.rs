//! Exponentially smoothed packing and covering objectives.
//!
//! Covering: `f(x) = 1ᵀx + μ Σ_j exp((1 − (Ax)_j)/μ)`.
//! Packing:  `f(y) = −1ᵀy + μ Σ_j exp(((Ay)_j − 1)/μ)`.
//!
//! Both are minimized over the box `Δ = {0 ≤ x_i ≤ 3/‖A_{:i}‖_∞}` with the
//! proximal setup `‖x‖_A = sqrt(Σ_i ‖A_{:i}‖_∞ x_i²)`.

use thiserror::Error;

use crate::instance::Mode;
use crate::matrix::SparseNonnegMatrix;

/// Exponents above this are treated as saturated: the objective reports
/// `+∞` and coordinate gradients report an infinite sentinel whose
/// truncation is exact.
pub const SATURATION_EXPONENT: f64 = 700.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("eps must lie in (0, 1/2), got {0}")]
    Eps(f64),
    #[error("instance dimensions must be positive (n = {n}, m = {m})")]
    Dimensions { n: usize, m: usize },
    #[error("n·m/eps = {0} must exceed e")]
    TooSmall(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub mu: f64,
    /// Local Lipschitz scale `L = 4/μ`.
    pub lipschitz: f64,
    pub eps: f64,
    pub n: usize,
    pub m: usize,
}

/// `μ = ε / (4 ln(nm/ε))`, `L = 4/μ`.
pub fn make_params(n: usize, m: usize, eps: f64) -> Result<SmoothingParams, ParamError> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(ParamError::Eps(eps));
    }
    if n == 0 || m == 0 {
        return Err(ParamError::Dimensions { n, m });
    }
    let ratio = n as f64 * m as f64 / eps;
    if ratio <= std::f64::consts::E {
        return Err(ParamError::TooSmall(ratio));
    }
    let mu = eps / (4.0 * ratio.ln());
    Ok(SmoothingParams {
        mu,
        lipschitz: 4.0 / mu,
        eps,
        n,
        m,
    })
}

/// `ξ = clamp(g, −1, 1)`.
#[inline]
pub fn truncate_gradient(g: f64) -> f64 {
    g.clamp(-1.0, 1.0)
}

/// A smoothed objective over a borrowed constraint matrix.
#[derive(Debug, Clone)]
pub struct SmoothedObjective<'a> {
    matrix: &'a SparseNonnegMatrix,
    mode: Mode,
    params: SmoothingParams,
    box_hi: Vec<f64>,
}

impl<'a> SmoothedObjective<'a> {
    pub fn new(matrix: &'a SparseNonnegMatrix, mode: Mode, params: SmoothingParams) -> Self {
        let box_hi = matrix.col_inf_norms().iter().map(|&c| 3.0 / c).collect();
        SmoothedObjective {
            matrix,
            mode,
            params,
            box_hi,
        }
    }

    /// Derives parameters from the matrix dimensions.
    pub fn with_eps(matrix: &'a SparseNonnegMatrix, mode: Mode, eps: f64) -> Result<Self, ParamError> {
        let params = make_params(matrix.ncols(), matrix.nrows(), eps)?;
        Ok(Self::new(matrix, mode, params))
    }

    pub fn matrix(&self) -> &'a SparseNonnegMatrix {
        self.matrix
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn params(&self) -> &SmoothingParams {
        &self.params
    }

    pub fn mu(&self) -> f64 {
        self.params.mu
    }

    /// Upper ends of `Δ`, `3/‖A_{:i}‖_∞`.
    pub fn box_hi(&self) -> &[f64] {
        &self.box_hi
    }

    pub fn in_box(&self, x: &[f64], slack: f64) -> bool {
        x.iter()
            .zip(&self.box_hi)
            .all(|(&v, &hi)| v >= -slack * hi && v <= hi * (1.0 + slack))
    }

    /// Penalty exponent for a row with value `(Ax)_j`.
    #[inline]
    pub fn exponent(&self, row_value: f64) -> f64 {
        match self.mode {
            Mode::Cover => (1.0 - row_value) / self.params.mu,
            Mode::Pack => (row_value - 1.0) / self.params.mu,
        }
    }

    /// Objective value. `row_values` may supply a cached `Ax`. Returns `+∞`
    /// when any penalty exponent is saturated.
    pub fn f_mu(&self, x: &[f64], row_values: Option<&[f64]>) -> f64 {
        assert_eq!(x.len(), self.matrix.ncols(), "dimension mismatch");
        let owned;
        let ax = match row_values {
            Some(r) => {
                assert_eq!(r.len(), self.matrix.nrows(), "dimension mismatch");
                r
            }
            None => {
                owned = self.matrix.mul_vec(x);
                &owned
            }
        };
        let linear: f64 = x.iter().sum();
        let mut penalty = 0.0;
        for &r in ax {
            let t = self.exponent(r);
            if t > SATURATION_EXPONENT {
                return f64::INFINITY;
            }
            penalty += t.exp();
        }
        let sign = match self.mode {
            Mode::Cover => 1.0,
            Mode::Pack => -1.0,
        };
        sign * linear + self.params.mu * penalty
    }

    /// `∇_i f` where `row_value(j)` yields `(Ax)_j` for rows in column `i`.
    #[inline]
    pub fn grad_coord_with(&self, i: usize, mut row_value: impl FnMut(usize) -> f64) -> f64 {
        let (rows, vals) = self.matrix.col(i);
        let mut s = 0.0;
        for (&r, &a) in rows.iter().zip(vals) {
            let t = self.exponent(row_value(r));
            if t > SATURATION_EXPONENT {
                return match self.mode {
                    Mode::Cover => f64::NEG_INFINITY,
                    Mode::Pack => f64::INFINITY,
                };
            }
            s += a * t.exp();
        }
        match self.mode {
            Mode::Cover => 1.0 - s,
            Mode::Pack => s - 1.0,
        }
    }

    /// `∇_i f` from a full vector of row values `Ax`.
    pub fn grad_coord(&self, i: usize, row_values: &[f64]) -> f64 {
        self.grad_coord_with(i, |j| row_values[j])
    }

    /// Full gradient at `x`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.matrix.mul_vec(x);
        (0..self.matrix.ncols()).map(|i| self.grad_coord(i, &ax)).collect()
    }

    /// `‖x‖_A`.
    pub fn a_norm(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.matrix.ncols(), "dimension mismatch");
        x.iter()
            .zip(self.matrix.col_inf_norms())
            .map(|(&v, &w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// `V_x(y) = ½‖x − y‖_A²`.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), y.len(), "dimension mismatch");
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        0.5 * self.a_norm(&d).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> SparseNonnegMatrix {
        SparseNonnegMatrix::from_dense(&[vec![1.0]]).unwrap()
    }

    fn params_with_mu(mu: f64) -> SmoothingParams {
        SmoothingParams {
            mu,
            lipschitz: 4.0 / mu,
            eps: 0.1,
            n: 1,
            m: 1,
        }
    }

    #[test]
    fn params_formulas() {
        let p = make_params(10, 10, 0.05).unwrap();
        assert!((p.mu - 0.05 / (4.0 * 2000f64.ln())).abs() < 1e-18);
        assert!((p.mu - 1.64454e-3).abs() < 1e-8);
        assert!((p.lipschitz - 2432.289).abs() < 1e-3);
        let q = make_params(1, 1, 0.1).unwrap();
        assert_eq!(q.mu, 0.1 / (4.0 * 10f64.ln()));
        assert_eq!(make_params(1, 1, 0.6), Err(ParamError::Eps(0.6)));
        assert!(make_params(1, 1, 0.0).is_err());
        assert!(make_params(0, 1, 0.1).is_err());
    }

    #[test]
    fn objective_values() {
        let a = one();
        let cover = SmoothedObjective::new(&a, Mode::Cover, params_with_mu(0.1));
        assert!((cover.f_mu(&[1.0], None) - 1.1).abs() < 1e-15);
        assert!((cover.f_mu(&[0.0], None) - 0.1 * 10f64.exp()).abs() < 1e-9);
        assert!((cover.f_mu(&[0.0], None) - 2202.6).abs() < 0.05);
        let pack = SmoothedObjective::new(&a, Mode::Pack, params_with_mu(0.1));
        assert!((pack.f_mu(&[0.0], None) - 0.1 * (-10f64).exp()).abs() < 1e-18);
        assert!((pack.f_mu(&[0.0], Some(&[0.0])) - pack.f_mu(&[0.0], None)).abs() == 0.0);
    }

    #[test]
    fn coordinate_gradients() {
        let a = one();
        let cover = SmoothedObjective::new(&a, Mode::Cover, params_with_mu(0.1));
        assert_eq!(cover.grad_coord(0, &[1.0]), 0.0);
        let g = cover.grad_coord(0, &[2.0]);
        assert!((g - (1.0 - (-10f64).exp())).abs() < 1e-15);
        assert!((g - 0.9999546).abs() < 1e-7);
        let pack = SmoothedObjective::new(&a, Mode::Pack, params_with_mu(0.1));
        assert_eq!(pack.grad_coord(0, &[1.0]), 0.0);
        assert!(pack.grad_coord(0, &[0.0]) >= -1.0);
    }

    #[test]
    fn saturation_is_reported() {
        let a = one();
        let cover = SmoothedObjective::new(&a, Mode::Cover, params_with_mu(1e-3));
        assert_eq!(cover.f_mu(&[0.0], None), f64::INFINITY);
        let g = cover.grad_coord(0, &[0.0]);
        assert_eq!(g, f64::NEG_INFINITY);
        assert_eq!(truncate_gradient(g), -1.0);
        let pack = SmoothedObjective::new(&a, Mode::Pack, params_with_mu(1e-3));
        assert_eq!(truncate_gradient(pack.grad_coord(0, &[3.0])), 1.0);
    }

    #[test]
    fn truncation_cases() {
        assert_eq!(truncate_gradient(0.5), 0.5);
        assert_eq!(truncate_gradient(-7.0), -1.0);
        assert_eq!(truncate_gradient(3.0), 1.0);
    }

    #[test]
    fn norm_and_divergence() {
        let a = SparseNonnegMatrix::from_dense(&[vec![4.0]]).unwrap();
        let obj = SmoothedObjective::new(&a, Mode::Cover, params_with_mu(0.1));
        assert_eq!(obj.a_norm(&[0.0]), 0.0);
        assert_eq!(obj.a_norm(&[0.5]), 1.0);
        assert_eq!(obj.bregman(&[0.3], &[0.3]), 0.0);
        assert_eq!(obj.bregman(&[0.5], &[0.0]), 0.5);
        assert_eq!(obj.bregman(&[0.1], &[0.7]), obj.bregman(&[0.7], &[0.1]));
        assert_eq!(obj.box_hi(), &[0.75]);
    }
}
