//! Dense row-major matrix type and elementwise/row operations.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CoreError, Result};

/// Fully known real matrix, row-major storage.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.n_rows, self.n_cols)
    }
}

impl DenseMatrix {
    /// Build from row-major values; every entry must be finite.
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(CoreError::DimensionMismatch {
                expected: n_rows * n_cols,
                got: values.len(),
            });
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(CoreError::NonFinite {
                    row: idx / n_cols.max(1),
                    col: idx % n_cols.max(1),
                });
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(CoreError::DimensionMismatch {
                    expected: n_cols,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(n_rows, n_cols, values)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.n_cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0 || self.n_cols == 0
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            let row = self.row(i);
            for (j, &v) in row.iter().enumerate() {
                out.values[j * self.n_rows + i] = v;
            }
        }
        out
    }

    /// Submatrix at the given (sorted, in-range) row and column indices.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows.len(), cols.len());
        for (li, &i) in rows.iter().enumerate() {
            let src = self.row(i);
            let dst = out.row_mut(li);
            for (lj, &j) in cols.iter().enumerate() {
                dst[lj] = src[j];
            }
        }
        out
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            y[i] = acc;
        }
    }

    /// y = A^T x
    pub fn matvec_t(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_rows);
        debug_assert_eq!(y.len(), self.n_cols);
        y.fill(0.0);
        for i in 0..self.n_rows {
            let row = self.row(i);
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (yj, &a) in y.iter_mut().zip(row.iter()) {
                *yj += xi * a;
            }
        }
    }

    /// W = A V, where V is a block of `k` column vectors stored row-major (n_cols x k).
    pub fn matmul_block(&self, v: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_cols, v.n_rows);
        let k = v.n_cols;
        let mut out = DenseMatrix::zeros(self.n_rows, k);
        for i in 0..self.n_rows {
            let row = self.row(i);
            let dst = out.row_mut(i);
            for (j, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let vr = v.row(j);
                for (d, &vv) in dst.iter_mut().zip(vr.iter()) {
                    *d += a * vv;
                }
            }
        }
        out
    }

    /// Z = A^T W, with W a block (n_rows x k).
    pub fn matmul_t_block(&self, w: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_rows, w.n_rows);
        let k = w.n_cols;
        let mut out = DenseMatrix::zeros(self.n_cols, k);
        for i in 0..self.n_rows {
            let row = self.row(i);
            let wr = w.row(i);
            for (j, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let dst = out.row_mut(j);
                for (d, &ww) in dst.iter_mut().zip(wr.iter()) {
                    *d += a * ww;
                }
            }
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// sqrt of the sum of squared entries.
pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Scale each non-zero row to unit L2 norm; zero rows stay zero.
pub fn normalize_rows(a: &DenseMatrix) -> DenseMatrix {
    let mut out = a.clone();
    for i in 0..out.n_rows {
        let row = out.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    out
}

/// Write one matrix row per line, comma-separated, no header.
///
/// Values use the shortest decimal form that parses back to the same f64,
/// so a read/write round trip is exact.
pub fn write_csv(a: &DenseMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..a.n_rows() {
        let row = a.row(i);
        let mut first = true;
        for v in row {
            if !first {
                write!(w, ",")?;
            }
            write!(w, "{}", v)?;
            first = false;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<DenseMatrix> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => {
                return Err(CoreError::Parse {
                    path: path.display().to_string(),
                    line: ln + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    DenseMatrix::from_rows(&rows)
}
