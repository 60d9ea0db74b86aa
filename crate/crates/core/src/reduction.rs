//! Diameter reduction for covering instances.
//!
//! Column `i` with coefficient ratio `r_i = max/min` is replaced by
//! `n_i = max(1, ⌈log₂ r_i⌉)` copies indexed by scale `l = 1..=n_i`. Copy `l`
//! has every entry capped at `2^l · colmin_i` and carries the upper bound
//! `2 / (2^l · colmin_i)`, rounded up to the next float when inexact. The
//! reduced LP (with those bounds) has the same optimum as the original, and
//! its optimal solutions satisfy `x̄ ≤ 2 / ‖Ā_{:(i,l)}‖_∞`.

use std::fmt::Write as _;

use crate::instance::{Mode, ProblemInstance};
use crate::matrix::SparseNonnegMatrix;

/// Smallest float `c` with `c · d ≥ num` exactly, so a binding cap never
/// turns a feasible reduced LP infeasible through rounding.
fn cap_at_least(num: f64, d: f64) -> f64 {
    let c = num / d;
    if c.mul_add(d, -num) < 0.0 { c.next_up() } else { c }
}

/// Reduces a covering instance. Packing instances need no reduction.
pub fn reduce(inst: &ProblemInstance) -> Option<ReducedInstance> {
    (inst.mode() == Mode::Cover).then(|| ReducedInstance::reduce(inst.matrix()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnRatio {
    /// `max_j A_ji / min_j A_ji` over the nonzeros of the column.
    pub ratio: f64,
    /// Number of scaled copies.
    pub copies: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedInstance {
    matrix: SparseNonnegMatrix,
    /// Reduced column → (original column, scale index `l ≥ 1`).
    col_map: Vec<(usize, u32)>,
    caps: Vec<f64>,
    ratios: Vec<ColumnRatio>,
    col_min: Vec<f64>,
    /// First reduced column of each original column; copies are contiguous.
    first_copy: Vec<usize>,
}

impl ReducedInstance {
    /// Builds the reduced covering matrix `Ā` and the per-copy caps.
    pub fn reduce(a: &SparseNonnegMatrix) -> ReducedInstance {
        let n = a.ncols();
        let mut columns = Vec::new();
        let mut col_map = Vec::new();
        let mut caps = Vec::new();
        let mut ratios = Vec::with_capacity(n);
        let mut col_min = Vec::with_capacity(n);
        let mut first_copy = Vec::with_capacity(n);
        for i in 0..n {
            let (rows, vals) = a.col(i);
            let lo = a.col_min(i);
            let hi = a.col_inf_norm(i);
            // smallest k with 2^k·lo ≥ hi, i.e. ⌈log₂ r_i⌉ without rounding
            // trouble at exact powers of two
            let mut k = 0u32;
            while pow2(k) * lo < hi {
                k += 1;
            }
            let copies = k.max(1) as usize;
            ratios.push(ColumnRatio {
                ratio: hi / lo,
                copies,
            });
            col_min.push(lo);
            first_copy.push(columns.len());
            for l in 1..=copies as u32 {
                let ceiling = pow2(l) * lo;
                columns.push(
                    rows.iter()
                        .zip(vals)
                        .map(|(&r, &v)| (r, v.min(ceiling)))
                        .collect::<Vec<_>>(),
                );
                col_map.push((i, l));
                caps.push(cap_at_least(2.0, ceiling));
            }
        }
        let matrix = SparseNonnegMatrix::from_columns(a.nrows(), columns)
            .expect("copies of a valid column are valid");
        ReducedInstance {
            matrix,
            col_map,
            caps,
            ratios,
            col_min,
            first_copy,
        }
    }

    pub fn matrix(&self) -> &SparseNonnegMatrix {
        &self.matrix
    }

    pub fn col_map(&self) -> &[(usize, u32)] {
        &self.col_map
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub fn ratios(&self) -> &[ColumnRatio] {
        &self.ratios
    }

    /// Smallest nonzero of each original column.
    pub fn col_min(&self) -> &[f64] {
        &self.col_min
    }

    pub fn original_n(&self) -> usize {
        self.ratios.len()
    }

    pub fn reduced_n(&self) -> usize {
        self.col_map.len()
    }

    /// `x_i = Σ_l x̄_(i,l)`. Preserves `1ᵀx` and maps `Āx̄ ≥ 1` to `Ax ≥ 1`.
    pub fn lift_solution(&self, xbar: &[f64]) -> Vec<f64> {
        assert_eq!(xbar.len(), self.reduced_n(), "reduced vector has wrong dimension");
        let mut x = vec![0.0; self.original_n()];
        for (&(i, _), &v) in self.col_map.iter().zip(xbar) {
            x[i] += v;
        }
        x
    }

    /// Places each `x_i` (first truncated to `1/colmin_i`) entirely on the
    /// largest scale `l` whose cap still admits it.
    pub fn project_solution(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.original_n(), "original vector has wrong dimension");
        let mut xbar = vec![0.0; self.reduced_n()];
        for (i, &xi) in x.iter().enumerate() {
            let xi = xi.min(1.0 / self.col_min[i]);
            if xi <= 0.0 {
                continue;
            }
            let first = self.first_copy[i];
            let copies = self.ratios[i].copies;
            // the l = 1 cap equals the truncation bound, so a copy always fits
            let l = (1..=copies)
                .rev()
                .find(|&l| xi <= self.caps[first + l - 1])
                .unwrap_or(1);
            xbar[first + l - 1] = xi;
        }
        xbar
    }

    /// Sidecar column map: one line per reduced column with the 1-based
    /// reduced index, 1-based original index, scale `l`, and cap.
    pub fn write_column_map(&self) -> String {
        let mut out = String::from("% reduced original scale cap\n");
        for (k, (&(i, l), cap)) in self.col_map.iter().zip(&self.caps).enumerate() {
            let _ = writeln!(out, "{} {} {} {}", k + 1, i + 1, l, cap);
        }
        out
    }
}

/// Parses the sidecar produced by [`ReducedInstance::write_column_map`] into
/// 0-based `(original, l, cap)` rows.
pub fn parse_column_map(text: &str) -> Result<Vec<(usize, u32, f64)>, String> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let bad = || format!("line {}: malformed column map entry {t:?}", ln + 1);
        if toks.len() != 4 {
            return Err(bad());
        }
        let k: usize = toks[0].parse().map_err(|_| bad())?;
        let i: usize = toks[1].parse().map_err(|_| bad())?;
        let l: u32 = toks[2].parse().map_err(|_| bad())?;
        let cap: f64 = toks[3].parse().map_err(|_| bad())?;
        if k != out.len() + 1 || i == 0 || l == 0 {
            return Err(bad());
        }
        out.push((i - 1, l, cap));
    }
    Ok(out)
}

#[inline]
fn pow2(k: u32) -> f64 {
    f64::powi(2.0, k as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(vals: &[f64]) -> SparseNonnegMatrix {
        let rows: Vec<Vec<f64>> = vals.iter().map(|&v| vec![v]).collect();
        SparseNonnegMatrix::from_dense(&rows).unwrap()
    }

    #[test]
    fn column_with_ratio_eight() {
        let red = ReducedInstance::reduce(&column(&[1.0, 8.0]));
        assert_eq!(red.ratios()[0], ColumnRatio { ratio: 8.0, copies: 3 });
        assert_eq!(
            red.matrix().to_dense(),
            vec![vec![1.0, 1.0, 1.0], vec![2.0, 4.0, 8.0]]
        );
        assert_eq!(red.caps(), &[1.0, 0.5, 0.25]);
        assert_eq!(red.col_map(), &[(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn equal_entries_keep_one_copy() {
        let red = ReducedInstance::reduce(&column(&[3.0, 3.0]));
        assert_eq!(red.reduced_n(), 1);
        assert_eq!(red.matrix().to_dense(), vec![vec![3.0], vec![3.0]]);
        let cap = red.caps()[0];
        assert!(cap.mul_add(3.0, -1.0) >= 0.0 && cap.next_down().mul_add(3.0, -1.0) < 0.0);
        let one = ReducedInstance::reduce(&column(&[1.0]));
        assert_eq!(one.matrix(), &column(&[1.0]));
        assert_eq!(one.caps(), &[1.0]);
    }

    #[test]
    fn lift_sums_copies() {
        let red = ReducedInstance::reduce(&column(&[1.0, 8.0]));
        assert_eq!(red.lift_solution(&[0.0; 3]), vec![0.0]);
        let x = red.lift_solution(&[0.1, 0.2, 0.3]);
        assert!((x[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn project_picks_largest_admissible_scale() {
        let red = ReducedInstance::reduce(&column(&[1.0, 8.0]));
        assert_eq!(red.project_solution(&[0.0]), vec![0.0; 3]);
        assert_eq!(red.project_solution(&[0.6]), vec![0.6, 0.0, 0.0]);
        assert_eq!(red.project_solution(&[0.3]), vec![0.0, 0.3, 0.0]);
        assert_eq!(red.project_solution(&[0.1]), vec![0.0, 0.0, 0.1]);
        // truncation to 1/colmin
        assert_eq!(red.project_solution(&[5.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(red.lift_solution(&red.project_solution(&[5.0])), vec![1.0]);
    }

    #[test]
    fn caps_respect_diameter_bound() {
        let a = SparseNonnegMatrix::from_dense(&[
            vec![0.3, 1.0, 0.0],
            vec![7.0, 0.0, 2.0],
            vec![1.5, 50.0, 2.0],
        ])
        .unwrap();
        let red = ReducedInstance::reduce(&a);
        for k in 0..red.reduced_n() {
            let (i, l) = red.col_map()[k];
            let bound = 2.0 / red.matrix().col_inf_norm(k);
            assert!(red.caps()[k] <= bound * (1.0 + 1e-15));
            if (l as usize) < red.ratios()[i].copies {
                assert!((red.caps()[k] - bound).abs() <= 1e-15 * bound);
            }
        }
        assert_eq!(
            red.reduced_n(),
            red.ratios().iter().map(|r| r.copies).sum::<usize>()
        );
    }

    #[test]
    fn column_map_sidecar_parses() {
        let red = ReducedInstance::reduce(&column(&[1.0, 8.0]));
        let rows = parse_column_map(&red.write_column_map()).unwrap();
        assert_eq!(rows, vec![(0, 1, 1.0), (0, 2, 0.5), (0, 3, 0.25)]);
        assert!(parse_column_map("2 1 1 1.0\n").is_err());
    }
}
