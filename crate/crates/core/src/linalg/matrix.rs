use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix stored in column-major order.
///
/// Constructors reject non-finite entries; the shape never changes after
/// construction. Arithmetic operators panic on shape mismatch, the way
/// `nalgebra` and `ndarray` do; the fallible kernels in this crate check
/// shapes up front and return [`Error::Dimension`] instead.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    /// Row-major entries; easier to read in JSON.
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        Matrix::from_row_slice(r.rows, r.cols, &r.data)
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.to_row_major(),
        }
    }
}

impl Matrix {
    /// Builds a matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k % rows,
                col: k / rows,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        let mut col_major = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                col_major[j * rows + i] = data[i * cols + j];
            }
        }
        Self::from_col_major(rows, cols, col_major)
    }

    /// Builds a matrix from a list of equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != n) {
            return Err(Error::Dimension("rows have unequal lengths".into()));
        }
        let flat: Vec<f64> = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::from_row_slice(m, n, &flat)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::eye(n, n)
    }

    /// The first `cols` columns of the `rows`-by-`rows` identity.
    pub fn eye(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    /// Column-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Columns `start..end` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Matrix {
        assert!(
            start < end && end <= self.cols,
            "column range out of bounds"
        );
        Matrix {
            rows: self.rows,
            cols: end - start,
            data: self.data[start * self.rows..end * self.rows].to_vec(),
        }
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Matrix {
        assert!(start < end && end <= self.rows, "row range out of bounds");
        Matrix::from_fn(end - start, self.cols, |i, j| self[(start + i, j)])
    }

    /// `selfᵀ · rhs` without forming the transpose.
    pub fn tr_mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.rows, rhs.rows,
            "tr_mul: {}x{} transposed times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        Matrix::from_fn(self.cols, rhs.cols, |i, j| dot(self.col(i), rhs.col(j)))
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Multiplies row `i` by `scales[i]`, i.e. `diag(scales) · self`.
    pub fn scale_rows(&self, scales: &[f64]) -> Matrix {
        assert_eq!(scales.len(), self.rows, "scale_rows: length mismatch");
        Matrix::from_fn(self.rows, self.cols, |i, j| scales[i] * self[(i, j)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn row_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.rows];
        for j in 0..self.cols {
            for (s, v) in sq.iter_mut().zip(self.col(j)) {
                *s += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// `‖selfᵀ self − I‖_F`.
    pub fn gram_residual(&self) -> f64 {
        let g = self.tr_mul(self);
        let mut s = 0.0;
        for j in 0..g.cols {
            for i in 0..g.rows {
                let d = g[(i, j)] - if i == j { 1.0 } else { 0.0 };
                s += d * d;
            }
        }
        s.sqrt()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::NonFinite {
                row: k % self.rows,
                col: k / self.rows,
            }),
            None => Ok(()),
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b == 0.0 {
                    continue;
                }
                for (d, a) in dst.iter_mut().zip(self.col(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

fn zip_with(a: &Matrix, b: &Matrix, op: &str, f: impl Fn(f64, f64) -> f64) -> Matrix {
    assert_eq!(
        a.shape(),
        b.shape(),
        "{op}: {}x{} vs {}x{}",
        a.rows,
        a.cols,
        b.rows,
        b.cols
    );
    Matrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(x, y)| f(*x, *y)).collect(),
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        zip_with(self, rhs, "add", |x, y| x + y)
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        zip_with(self, rhs, "sub", |x, y| x - y)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, " ")?;
            for j in 0..self.cols.min(8) {
                write!(f, " {:>12.5e}", self[(i, j)])?;
            }
            writeln!(f, "{}", if self.cols > 8 { " ..." } else { "" })?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}
