//! Column-oriented sparse nonnegative matrices and Matrix Market I/O.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("entry ({row}, {col}) has nonpositive value {value}")]
    NonPositive { row: usize, col: usize, value: f64 },
    #[error("entry ({row}, {col}) out of range for a {m}x{n} matrix")]
    OutOfRange { row: usize, col: usize, m: usize, n: usize },
    #[error("duplicate entry ({row}, {col})")]
    Duplicate { row: usize, col: usize },
    #[error("empty column {col}")]
    EmptyColumn { col: usize },
}

/// Error from [`parse_matrix_market`], carrying the 1-based line it refers to.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

/// Sparse matrix with strictly positive stored entries, kept in compressed
/// column form with the per-column maximum cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseNonnegMatrix {
    m: usize,
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    col_inf_norm: Vec<f64>,
}

impl SparseNonnegMatrix {
    /// Builds a matrix from per-column `(row, value)` lists. Rows within a
    /// column may come in any order; they are stored sorted.
    pub fn from_columns(
        m: usize,
        columns: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self, MatrixError> {
        let n = columns.len();
        let nnz = columns.iter().map(Vec::len).sum();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        let mut col_inf_norm = Vec::with_capacity(n);
        col_ptr.push(0);
        for (col, mut entries) in columns.into_iter().enumerate() {
            if entries.is_empty() {
                return Err(MatrixError::EmptyColumn { col });
            }
            entries.sort_by_key(|&(r, _)| r);
            let mut max = 0.0f64;
            let mut prev: Option<usize> = None;
            for (row, value) in entries {
                if row >= m {
                    return Err(MatrixError::OutOfRange { row, col, m, n });
                }
                // also rejects NaN
                if !(value > 0.0) || !value.is_finite() {
                    return Err(MatrixError::NonPositive { row, col, value });
                }
                if prev == Some(row) {
                    return Err(MatrixError::Duplicate { row, col });
                }
                prev = Some(row);
                max = max.max(value);
                row_idx.push(row);
                values.push(value);
            }
            col_inf_norm.push(max);
            col_ptr.push(row_idx.len());
        }
        Ok(SparseNonnegMatrix {
            m,
            n,
            col_ptr,
            row_idx,
            values,
            col_inf_norm,
        })
    }

    /// Builds a matrix from 0-based `(row, col, value)` triplets.
    pub fn from_triplets(
        m: usize,
        n: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, MatrixError> {
        let mut columns = vec![Vec::new(); n];
        for &(row, col, value) in triplets {
            if col >= n {
                return Err(MatrixError::OutOfRange { row, col, m, n });
            }
            columns[col].push((row, value));
        }
        Self::from_columns(m, columns)
    }

    /// Builds a matrix from dense rows, dropping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::new(); n];
        for (j, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "ragged dense matrix");
            for (i, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    columns[i].push((j, v));
                }
            }
        }
        Self::from_columns(m, columns)
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `i`.
    #[inline]
    pub fn col(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_ptr[i], self.col_ptr[i + 1]);
        (&self.row_idx[a..b], &self.values[a..b])
    }

    #[inline]
    pub fn col_nnz(&self, i: usize) -> usize {
        self.col_ptr[i + 1] - self.col_ptr[i]
    }

    /// `‖A_{:i}‖_∞`.
    #[inline]
    pub fn col_inf_norm(&self, i: usize) -> f64 {
        self.col_inf_norm[i]
    }

    pub fn col_inf_norms(&self) -> &[f64] {
        &self.col_inf_norm
    }

    /// Smallest stored entry of column `i`.
    pub fn col_min(&self, i: usize) -> f64 {
        self.col(i).1.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `‖A_{j:}‖_∞` for every row; zero for empty rows.
    pub fn row_maxes(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.m];
        for (&r, &v) in self.row_idx.iter().zip(&self.values) {
            out[r] = out[r].max(v);
        }
        out
    }

    pub fn row_nnz(&self) -> Vec<usize> {
        let mut out = vec![0; self.m];
        for &r in &self.row_idx {
            out[r] += 1;
        }
        out
    }

    /// Dense product `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "dimension mismatch in A·x");
        let mut out = vec![0.0; self.m];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(i);
            for (&r, &v) in rows.iter().zip(vals) {
                out[r] += v * xi;
            }
        }
        out
    }

    /// Dense product `Aᵀ y`.
    pub fn mul_transpose_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.m, "dimension mismatch in Aᵀ·y");
        (0..self.n)
            .map(|i| {
                let (rows, vals) = self.col(i);
                rows.iter().zip(vals).map(|(&r, &v)| v * y[r]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> SparseNonnegMatrix {
        let mut columns = vec![Vec::new(); self.m];
        for (r, c, v) in self.triplets() {
            columns[r].push((c, v));
        }
        Self::from_columns(self.n, columns).expect("transpose of a matrix with no empty rows")
    }

    /// Entries in column-major order as 0-based `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (rows, vals) = self.col(i);
            rows.iter().zip(vals).map(move |(&r, &v)| (r, i, v))
        })
    }

    /// Entrywise `f(value)`; `f` must keep entries positive.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> SparseNonnegMatrix {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let col_inf_norm = (0..self.n)
            .map(|i| {
                values[self.col_ptr[i]..self.col_ptr[i + 1]]
                    .iter()
                    .copied()
                    .fold(0.0, f64::max)
            })
            .collect();
        SparseNonnegMatrix {
            m: self.m,
            n: self.n,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values,
            col_inf_norm,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.m];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }
}

/// Parses Matrix Market `coordinate real general` text. Zero-valued entries
/// are dropped.
pub fn parse_matrix_market(text: &str) -> Result<SparseNonnegMatrix, ParseError> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "malformed header: empty input"))?;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    let expected = ["%%matrixmarket", "matrix", "coordinate", "real", "general"];
    if fields.len() != expected.len() || fields.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(ParseError::new(
            1,
            format!("malformed header {header:?}: expected \"%%MatrixMarket matrix coordinate real general\""),
        ));
    }

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_line, size) = data
        .next()
        .ok_or_else(|| ParseError::new(1, "missing size line"))?;
    let dims: Vec<i64> = size
        .split_whitespace()
        .map(|t| t.parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ParseError::new(size_line, format!("malformed size line {size:?}")))?;
    if dims.len() != 3 {
        return Err(ParseError::new(
            size_line,
            "size line must contain rows, columns and entry count",
        ));
    }
    if dims[0] <= 0 || dims[1] <= 0 || dims[2] < 0 {
        return Err(ParseError::new(size_line, "nonpositive dimensions"));
    }
    let (m, n, count) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut seen = std::collections::HashSet::with_capacity(count);
    let mut read = 0usize;
    for (line, entry) in data {
        if read == count {
            return Err(ParseError::new(line, "more entries than declared"));
        }
        read += 1;
        let toks: Vec<&str> = entry.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(ParseError::new(line, format!("malformed entry {entry:?}")));
        }
        let parse_idx = |t: &str, bound: usize, what: &str| -> Result<usize, ParseError> {
            let k: i64 = t
                .parse()
                .map_err(|_| ParseError::new(line, format!("malformed {what} index {t:?}")))?;
            if k < 1 || k as usize > bound {
                return Err(ParseError::new(
                    line,
                    format!("{what} index {k} out of range 1..={bound}"),
                ));
            }
            Ok(k as usize - 1)
        };
        let row = parse_idx(toks[0], m, "row")?;
        let col = parse_idx(toks[1], n, "column")?;
        let value: f64 = toks[2]
            .parse()
            .map_err(|_| ParseError::new(line, format!("malformed value {:?}", toks[2])))?;
        if !value.is_finite() {
            return Err(ParseError::new(line, "non-finite entry"));
        }
        if value < 0.0 {
            return Err(ParseError::new(line, "negative entry"));
        }
        if !seen.insert((row, col)) {
            return Err(ParseError::new(
                line,
                format!("duplicate entry ({}, {})", row + 1, col + 1),
            ));
        }
        if value > 0.0 {
            columns[col].push((row, value));
        }
    }
    if read != count {
        return Err(ParseError::new(
            size_line,
            format!("declared {count} entries but found {read}"),
        ));
    }
    if let Some(col) = columns.iter().position(Vec::is_empty) {
        return Err(ParseError::new(
            size_line,
            format!("empty column {}", col + 1),
        ));
    }
    SparseNonnegMatrix::from_columns(m, columns).map_err(|e| ParseError::new(size_line, e.to_string()))
}

/// Serializes in the format accepted by [`parse_matrix_market`]. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_matrix_market(a: &SparseNonnegMatrix) -> String {
    let mut out = String::with_capacity(32 + 24 * a.nnz());
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (r, c, v) in a.triplets() {
        let _ = writeln!(out, "{} {} {}", r + 1, c + 1, v);
    }
    out
}
