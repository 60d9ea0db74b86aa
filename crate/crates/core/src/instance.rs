//! Problem instances and the preconditioning that precedes the solver:
//! scaling so the smallest row maximum is one, and removal of very small and
//! very large entries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{MatrixError, SparseNonnegMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `min 1ᵀx  s.t.  Ax ≥ 1, x ≥ 0`
    Cover,
    /// `max 1ᵀy  s.t.  Ay ≤ 1, y ≥ 0`
    Pack,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Cover => "cover",
            Mode::Pack => "pack",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cover" => Ok(Mode::Cover),
            "pack" => Ok(Mode::Pack),
            other => Err(format!("unknown problem kind {other:?}")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("row {row} has no nonzero entries")]
    EmptyRow { row: usize },
    #[error("instance is not normalized (smallest row maximum is {min_row_max})")]
    NotNormalized { min_row_max: f64 },
    #[error("eps must lie in (0, 1), got {0}")]
    BadEps(f64),
    #[error("row {row} lost all entries during clamping")]
    Conditioning { row: usize },
}

/// Record of one entry removed by [`ProblemInstance::clamp_entries`].
/// Variable and row indices refer to the instance before clamping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClampFixup {
    /// Entry `A[row][variable] ≤ ε/(mn)` was dropped; every variable is
    /// bumped by `amount` at recovery (once, however many such fixups exist).
    SmallEntry { variable: usize, row: usize, amount: f64 },
    /// Entry `A[dropped_row][variable] ≥ n/ε`: the row was dropped and the
    /// variable is raised to at least `amount` at recovery.
    LargeEntry { variable: usize, dropped_row: usize, amount: f64 },
}

impl ClampFixup {
    pub fn amount(&self) -> f64 {
        match *self {
            ClampFixup::SmallEntry { amount, .. } | ClampFixup::LargeEntry { amount, .. } => amount,
        }
    }
}

/// A packing or covering instance together with the provenance needed to map
/// solutions back to the instance it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    matrix: SparseNonnegMatrix,
    mode: Mode,
    /// Solutions of this instance map to the source instance as `x * scale`.
    scale: f64,
    fixups: Vec<ClampFixup>,
    eps_used: Option<f64>,
    /// Column `k` of `matrix` is column `col_map[k]` of the pre-clamp instance.
    col_map: Vec<usize>,
    source_n: usize,
}

impl ProblemInstance {
    /// Wraps a matrix. Rows without entries are rejected: for covering they
    /// make the instance infeasible, for packing they break normalization.
    pub fn new(matrix: SparseNonnegMatrix, mode: Mode) -> Result<Self, InstanceError> {
        if let Some(row) = matrix.row_nnz().iter().position(|&c| c == 0) {
            return Err(InstanceError::EmptyRow { row });
        }
        let n = matrix.ncols();
        Ok(ProblemInstance {
            matrix,
            mode,
            scale: 1.0,
            fixups: Vec::new(),
            eps_used: None,
            col_map: (0..n).collect(),
            source_n: n,
        })
    }

    pub fn matrix(&self) -> &SparseNonnegMatrix {
        &self.matrix
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn fixups(&self) -> &[ClampFixup] {
        &self.fixups
    }

    pub fn eps_used(&self) -> Option<f64> {
        self.eps_used
    }

    pub fn col_map(&self) -> &[usize] {
        &self.col_map
    }

    /// Column count of the instance this one was clamped from.
    pub fn source_n(&self) -> usize {
        self.source_n
    }

    /// `min_j ‖A_{j:}‖_∞`, or 1 for an instance with no rows left.
    pub fn min_row_max(&self) -> f64 {
        self.matrix
            .row_maxes()
            .into_iter()
            .reduce(f64::min)
            .unwrap_or(1.0)
    }

    pub fn is_normalized(&self) -> bool {
        (self.min_row_max() - 1.0).abs() <= 1e-12
    }

    /// Divides every entry by the smallest row maximum so that it becomes 1.
    /// A solution `y` of the result is a solution `scale · y` of `self`.
    pub fn normalize(&self) -> ProblemInstance {
        let d = self.min_row_max();
        if d == 1.0 {
            return self.clone();
        }
        ProblemInstance {
            matrix: self.matrix.map_values(|v| v / d),
            scale: self.scale / d,
            ..self.clone()
        }
    }

    /// Drops entries `≤ ε/(mn)` and every row holding an entry `≥ n/ε`,
    /// recording a [`ClampFixup`] for each. Columns left empty are removed.
    pub fn clamp_entries(&self, eps: f64) -> Result<ProblemInstance, InstanceError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(InstanceError::BadEps(eps));
        }
        let min_row_max = self.min_row_max();
        if (min_row_max - 1.0).abs() > 1e-12 {
            return Err(InstanceError::NotNormalized { min_row_max });
        }
        let (m, n) = (self.matrix.nrows(), self.matrix.ncols());
        let small = eps / (m as f64 * n as f64);
        let large = n as f64 / eps;
        let amount = eps / n as f64;

        let mut fixups = Vec::new();
        let mut dropped = vec![false; m];
        for (r, c, v) in self.matrix.triplets() {
            if v >= large {
                dropped[r] = true;
                fixups.push(ClampFixup::LargeEntry {
                    variable: c,
                    dropped_row: r,
                    amount,
                });
            }
        }
        let mut row_new = vec![usize::MAX; m];
        let mut kept_rows = 0;
        for (r, slot) in row_new.iter_mut().enumerate() {
            if !dropped[r] {
                *slot = kept_rows;
                kept_rows += 1;
            }
        }

        let mut columns = Vec::with_capacity(n);
        let mut col_map = Vec::with_capacity(n);
        let mut row_alive = vec![false; m];
        for i in 0..n {
            let (rows, vals) = self.matrix.col(i);
            let mut kept = Vec::with_capacity(rows.len());
            for (&r, &v) in rows.iter().zip(vals) {
                if dropped[r] {
                    continue;
                }
                if v <= small {
                    fixups.push(ClampFixup::SmallEntry {
                        variable: i,
                        row: r,
                        amount,
                    });
                    continue;
                }
                row_alive[r] = true;
                kept.push((row_new[r], v));
            }
            if !kept.is_empty() {
                columns.push(kept);
                col_map.push(i);
            }
        }
        if let Some(row) = (0..m).find(|&r| !dropped[r] && !row_alive[r]) {
            return Err(InstanceError::Conditioning { row });
        }
        // Fixups recorded against this instance's columns; compose with any
        // earlier column map so indices stay in the caller's space.
        let fixups = fixups
            .into_iter()
            .map(|f| match f {
                ClampFixup::SmallEntry { variable, row, amount } => ClampFixup::SmallEntry {
                    variable: self.col_map[variable],
                    row,
                    amount,
                },
                ClampFixup::LargeEntry { variable, dropped_row, amount } => ClampFixup::LargeEntry {
                    variable: self.col_map[variable],
                    dropped_row,
                    amount,
                },
            })
            .collect::<Vec<_>>();
        let col_map = col_map.into_iter().map(|k| self.col_map[k]).collect();
        let matrix = SparseNonnegMatrix::from_columns(kept_rows, columns)?;
        let mut all_fixups = self.fixups.clone();
        all_fixups.extend(fixups);
        Ok(ProblemInstance {
            matrix,
            mode: self.mode,
            scale: self.scale,
            fixups: all_fixups,
            eps_used: Some(eps),
            col_map,
            source_n: self.source_n,
        })
    }

    /// Maps a solution of this (clamped) instance into the pre-clamp variable
    /// space: scatter through the column map, add the small-entry bump once,
    /// then raise fixed variables to their floor.
    pub fn apply_fixups(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.col_map.len(), "solution has wrong dimension");
        let mut out = vec![0.0; self.source_n];
        for (&k, &v) in self.col_map.iter().zip(x) {
            out[k] = v;
        }
        if let Some(bump) = self.fixups.iter().find_map(|f| match f {
            ClampFixup::SmallEntry { amount, .. } => Some(*amount),
            _ => None,
        }) {
            out.iter_mut().for_each(|v| *v += bump);
        }
        for f in &self.fixups {
            if let ClampFixup::LargeEntry { variable, amount, .. } = *f {
                out[variable] = out[variable].max(amount);
            }
        }
        out
    }

    /// Maps a pre-clamp solution back through the normalization scale.
    pub fn unscale(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v * self.scale).collect()
    }
}
