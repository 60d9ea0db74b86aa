//! Exact rational LP oracle for small instances.
//!
//! Solves `min 1ᵀx, Ax ≥ 1` or `max 1ᵀy, Ay ≤ 1` (optionally with upper
//! bounds `x ≤ caps`) by a two-phase tableau simplex over `BigRational` with
//! Bland's rule. Floating inputs are converted exactly (every finite `f64` is
//! a dyadic rational). The result carries a dual solution, and
//! [`ExactLpResult::verify`] re-checks primal feasibility, dual feasibility
//! and equality of the two objectives in exact arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::instance::Mode;
use crate::matrix::SparseNonnegMatrix;

type Q = BigRational;

/// Largest `n + m + #caps` accepted.
pub const MAX_EXACT_SIZE: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("instance too large for the exact oracle ({0} > {MAX_EXACT_SIZE})")]
    TooLarge(usize),
    #[error("value {0} is not finite")]
    NotFinite(f64),
    #[error("caps vector has length {got}, expected {expected}")]
    CapsLength { got: usize, expected: usize },
    #[error("LP is infeasible")]
    Infeasible,
    #[error("LP is unbounded")]
    Unbounded,
    #[error("certificate check failed: {0}")]
    Certificate(String),
}

/// Optimum with primal and dual certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLpResult {
    pub mode: Mode,
    pub opt: Q,
    /// Optimal primal point.
    pub x: Vec<Q>,
    /// Nonnegative multipliers of the `m` row constraints.
    pub row_duals: Vec<Q>,
    /// Nonnegative multipliers of the upper bounds (empty without caps).
    pub cap_duals: Vec<Q>,
    /// Basic columns of the final tableau.
    pub basis: Vec<usize>,
}

impl ExactLpResult {
    pub fn opt_f64(&self) -> f64 {
        self.opt.to_f64().unwrap_or(f64::NAN)
    }

    pub fn x_f64(&self) -> Vec<f64> {
        self.x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Re-verifies the certificate against the given data.
    ///
    /// Covering dual: `max 1ᵀy − uᵀv, Aᵀy − v ≤ 1`.
    /// Packing dual: `min 1ᵀy + uᵀv, Aᵀy + v ≥ 1`.
    pub fn verify(&self, a: &SparseNonnegMatrix, caps: Option<&[f64]>) -> Result<(), LpError> {
        let fail = |s: String| Err(LpError::Certificate(s));
        let (m, n) = (a.nrows(), a.ncols());
        let caps = exact_caps(caps, n)?;
        if self.x.len() != n || self.row_duals.len() != m {
            return fail("dimension mismatch".into());
        }
        if self.cap_duals.len() != caps.as_ref().map_or(0, Vec::len) {
            return fail("cap dual dimension mismatch".into());
        }
        let one = Q::one();
        let cols = exact_columns(a)?;
        // primal
        if let Some(i) = self.x.iter().position(|v| v.is_negative()) {
            return fail(format!("x[{i}] < 0"));
        }
        if let Some(u) = &caps {
            if let Some(i) = (0..n).find(|&i| self.x[i] > u[i]) {
                return fail(format!("x[{i}] exceeds its cap"));
            }
        }
        let mut ax = vec![Q::zero(); m];
        for (i, col) in cols.iter().enumerate() {
            for (r, v) in col {
                ax[*r] += v * &self.x[i];
            }
        }
        for (j, v) in ax.iter().enumerate() {
            let ok = match self.mode {
                Mode::Cover => *v >= one,
                Mode::Pack => *v <= one,
            };
            if !ok {
                return fail(format!("row {j} violated"));
            }
        }
        let primal: Q = self.x.iter().sum();
        if primal != self.opt {
            return fail("reported optimum differs from 1ᵀx".into());
        }
        // dual
        if self.row_duals.iter().chain(&self.cap_duals).any(|v| v.is_negative()) {
            return fail("negative dual multiplier".into());
        }
        for (i, col) in cols.iter().enumerate() {
            let mut s = Q::zero();
            for (r, v) in col {
                s += v * &self.row_duals[*r];
            }
            let vi = self.cap_duals.get(i).cloned().unwrap_or_else(Q::zero);
            let ok = match self.mode {
                Mode::Cover => s - vi <= one,
                Mode::Pack => s + vi >= one,
            };
            if !ok {
                return fail(format!("dual constraint {i} violated"));
            }
        }
        let mut dual: Q = self.row_duals.iter().sum();
        if let Some(u) = &caps {
            let uv: Q = u.iter().zip(&self.cap_duals).map(|(a, b)| a * b).sum();
            match self.mode {
                Mode::Cover => dual -= uv,
                Mode::Pack => dual += uv,
            }
        }
        if dual != self.opt {
            return fail("primal and dual objectives differ".into());
        }
        Ok(())
    }
}

/// Exact optimum of the covering or packing LP over `a`, optionally with
/// upper bounds `x ≤ caps`. The certificate is verified before returning.
pub fn exact_opt(a: &SparseNonnegMatrix, mode: Mode, caps: Option<&[f64]>) -> Result<ExactLpResult, LpError> {
    let (m, n) = (a.nrows(), a.ncols());
    let size = n + m + caps.map_or(0, <[f64]>::len);
    if size > MAX_EXACT_SIZE {
        return Err(LpError::TooLarge(size));
    }
    let cols = exact_columns(a)?;
    let caps_q = exact_caps(caps, n)?;
    let nc = caps_q.as_ref().map_or(0, Vec::len);

    // standard form: variables x (n), slacks s (m), cap slacks t (nc)
    // rows: A x ∓ s = 1, x + t = u
    let rows = m + nc;
    let nvar = n + m + nc;
    let mut t = vec![vec![Q::zero(); nvar + rows]; rows];
    let mut rhs = vec![Q::zero(); rows];
    for (i, col) in cols.iter().enumerate() {
        for (r, v) in col {
            t[*r][i] = v.clone();
        }
    }
    let slack_sign = match mode {
        Mode::Cover => -Q::one(),
        Mode::Pack => Q::one(),
    };
    for j in 0..m {
        t[j][n + j] = slack_sign.clone();
        rhs[j] = Q::one();
    }
    if let Some(u) = &caps_q {
        for i in 0..n {
            t[m + i][i] = Q::one();
            t[m + i][n + m + i] = Q::one();
            rhs[m + i] = u[i].clone();
        }
    }
    for (r, row) in t.iter_mut().enumerate() {
        row[nvar + r] = Q::one();
    }
    let mut tab = Tableau {
        t,
        rhs,
        basis: (nvar..nvar + rows).collect(),
    };

    // phase 1: minimize the sum of artificials
    let mut c1 = vec![Q::zero(); nvar + rows];
    c1[nvar..].iter_mut().for_each(|c| *c = Q::one());
    tab.optimize(&c1, |_| true)?;
    let infeas: Q = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&b, _)| b >= nvar)
        .map(|(_, v)| v.clone())
        .sum();
    if infeas.is_positive() {
        return Err(LpError::Infeasible);
    }
    // drive zero-level artificials out where possible; rows where that fails
    // are redundant and keep their artificial at zero
    for r in 0..rows {
        if tab.basis[r] >= nvar {
            if let Some(c) = (0..nvar).find(|&c| !tab.t[r][c].is_zero()) {
                tab.pivot(r, c);
            }
        }
    }

    // phase 2
    let mut c2 = vec![Q::zero(); nvar + rows];
    let sign = match mode {
        Mode::Cover => Q::one(),
        Mode::Pack => -Q::one(),
    };
    c2[..n].iter_mut().for_each(|c| *c = sign.clone());
    tab.optimize(&c2, |c| c < nvar)?;

    let mut x = vec![Q::zero(); n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs[r].clone();
        }
    }
    // π = c_Bᵀ B⁻¹; the artificial columns of the tableau hold B⁻¹
    let pi: Vec<Q> = (0..rows)
        .map(|k| {
            tab.basis
                .iter()
                .enumerate()
                .fold(Q::zero(), |acc, (r, &b)| acc + &c2[b] * &tab.t[r][nvar + k])
        })
        .collect();
    // map the multipliers of the min-form equalities to nonnegative duals
    let (row_duals, cap_duals) = match mode {
        Mode::Cover => (pi[..m].to_vec(), pi[m..].iter().map(|v| -v).collect()),
        Mode::Pack => (
            pi[..m].iter().map(|v| -v).collect(),
            pi[m..].iter().map(|v| -v).collect(),
        ),
    };
    let result = ExactLpResult {
        mode,
        opt: x.iter().sum(),
        x,
        row_duals,
        cap_duals,
        basis: tab.basis.clone(),
    };
    result.verify(a, caps)?;
    Ok(result)
}

/// Exact rational value of a finite float.
pub fn to_rational(v: f64) -> Result<Q, LpError> {
    Q::from_float(v).ok_or(LpError::NotFinite(v))
}

fn exact_columns(a: &SparseNonnegMatrix) -> Result<Vec<Vec<(usize, Q)>>, LpError> {
    (0..a.ncols())
        .map(|i| {
            let (rows, vals) = a.col(i);
            rows.iter()
                .zip(vals)
                .map(|(&r, &v)| Ok((r, to_rational(v)?)))
                .collect()
        })
        .collect()
}

fn exact_caps(caps: Option<&[f64]>, n: usize) -> Result<Option<Vec<Q>>, LpError> {
    match caps {
        None => Ok(None),
        Some(c) if c.len() != n => Err(LpError::CapsLength {
            got: c.len(),
            expected: n,
        }),
        Some(c) => c.iter().map(|&v| to_rational(v)).collect::<Result<Vec<_>, _>>().map(Some),
    }
}

struct Tableau {
    t: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        if !p.is_one() {
            self.t[r].iter_mut().for_each(|v| *v /= &p);
            self.rhs[r] /= &p;
        }
        let prow = self.t[r].clone();
        let prhs = self.rhs[r].clone();
        for k in 0..self.t.len() {
            if k == r || self.t[k][c].is_zero() {
                continue;
            }
            let f = self.t[k][c].clone();
            for (v, pv) in self.t[k].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.rhs[k] -= &f * &prhs;
        }
        self.basis[r] = c;
    }

    /// Bland's rule minimization of `cost` over columns admitted by `allowed`.
    fn optimize(&mut self, cost: &[Q], allowed: impl Fn(usize) -> bool) -> Result<(), LpError> {
        let ncols = cost.len();
        loop {
            let mut in_basis = vec![false; ncols];
            self.basis.iter().for_each(|&b| in_basis[b] = true);
            let entering = (0..ncols).filter(|&c| !in_basis[c] && allowed(c)).find(|&c| {
                let z = self
                    .basis
                    .iter()
                    .enumerate()
                    .fold(Q::zero(), |acc, (r, &b)| {
                        if self.t[r][c].is_zero() {
                            acc
                        } else {
                            acc + &cost[b] * &self.t[r][c]
                        }
                    });
                (&cost[c] - z).is_negative()
            });
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, Q)> = None;
            for r in 0..self.t.len() {
                if !self.t[r][c].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / &self.t[r][c];
                let better = match &leave {
                    None => true,
                    Some((lr, lv)) => ratio < *lv || (ratio == *lv && self.basis[r] < self.basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, c);
        }
    }
}

/// `p/q` as a rational.
pub fn ratio(p: i64, q: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(q))
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(rows: &[&[f64]]) -> SparseNonnegMatrix {
        SparseNonnegMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn scalar() {
        let a = dense(&[&[1.0]]);
        let r = exact_opt(&a, Mode::Cover, None).unwrap();
        assert_eq!(r.opt, Q::one());
        assert_eq!(r.x, vec![Q::one()]);
        assert_eq!(exact_opt(&a, Mode::Pack, None).unwrap().opt, Q::one());
    }

    #[test]
    fn two_by_two() {
        let a = dense(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let c = exact_opt(&a, Mode::Cover, None).unwrap();
        assert_eq!(c.opt, ratio(2, 3));
        assert_eq!(c.x, vec![ratio(1, 3), ratio(1, 3)]);
        let p = exact_opt(&a, Mode::Pack, None).unwrap();
        assert_eq!(p.opt, ratio(2, 3));
    }

    #[test]
    fn caps_bind() {
        // min x1 + x2, x1 + x2 ≥ 1 ... with x1 ≤ 1/4 forces x2 ≥ 3/4
        let a = dense(&[&[1.0, 1.0], &[4.0, 0.0]]);
        let r = exact_opt(&a, Mode::Cover, Some(&[1.0, 2.0])).unwrap();
        assert_eq!(r.opt, Q::one());
        let infeasible = exact_opt(&a, Mode::Cover, Some(&[0.125, 2.0]));
        assert_eq!(infeasible, Err(LpError::Infeasible));
        let p = exact_opt(&a, Mode::Pack, Some(&[0.1, 0.5])).unwrap();
        assert_eq!(p.opt, to_rational(0.1).unwrap() + ratio(1, 2));
    }

    #[test]
    fn tampered_certificate_fails() {
        let a = dense(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let mut c = exact_opt(&a, Mode::Cover, None).unwrap();
        c.row_duals[0] += ratio(1, 10);
        assert!(c.verify(&a, None).is_err());
        let mut c = exact_opt(&a, Mode::Cover, None).unwrap();
        c.x[0] = Q::zero();
        assert!(c.verify(&a, None).is_err());
    }

    #[test]
    fn size_limit() {
        let a = SparseNonnegMatrix::from_columns(1, vec![vec![(0, 1.0)]; MAX_EXACT_SIZE]).unwrap();
        assert!(matches!(exact_opt(&a, Mode::Cover, None), Err(LpError::TooLarge(_))));
    }

    #[test]
    fn matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..40 {
            let m = rng.gen_range(1..=3);
            let n = rng.gen_range(1..=3);
            let mut rows = vec![vec![0.0; n]; m];
            for row in rows.iter_mut() {
                for v in row.iter_mut() {
                    if rng.gen_bool(0.7) {
                        *v = rng.gen_range(1..=8) as f64 / 4.0;
                    }
                }
            }
            for j in 0..m {
                if rows[j].iter().all(|&v| v == 0.0) {
                    rows[j][j % n] = 1.0;
                }
            }
            for i in 0..n {
                if rows.iter().all(|r| r[i] == 0.0) {
                    rows[i % m][i] = 0.5;
                }
            }
            let a = SparseNonnegMatrix::from_dense(&rows).unwrap();
            let caps: Option<Vec<f64>> = (trial % 2 == 1).then(|| (0..n).map(|_| rng.gen_range(1..=8) as f64).collect());
            for mode in [Mode::Cover, Mode::Pack] {
                let brute = vertex::enumerate_opt(&a, mode, caps.as_deref());
                match exact_opt(&a, mode, caps.as_deref()) {
                    Ok(r) => assert_eq!(Some(r.opt), brute, "trial {trial} {mode}"),
                    Err(LpError::Infeasible) => assert_eq!(brute, None, "trial {trial}"),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn cover_equals_pack_of_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (m, n) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
            let mut trip = Vec::new();
            for j in 0..m {
                for i in 0..n {
                    if rng.gen_bool(0.6) || i == j % n || j == i % m {
                        trip.push((j, i, rng.gen_range(0.1..10.0)));
                    }
                }
            }
            let a = SparseNonnegMatrix::from_triplets(m, n, &trip).unwrap();
            let c = exact_opt(&a, Mode::Cover, None).unwrap();
            let p = exact_opt(&a.transpose(), Mode::Pack, None).unwrap();
            assert_eq!(c.opt, p.opt);
        }
    }
}
