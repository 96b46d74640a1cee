//! Dense row-major `f64` matrices and the kernels every protocol step runs on:
//! multiplication, Gauss-Jordan inversion and full-rank decomposition.

use std::fmt;

use thiserror::Error;

/// Pivot threshold (relative to the largest magnitude) below which `invert`
/// declares a matrix singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-12;

/// Default relative threshold used for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix dimensions must be positive, got {0}x{1}")]
    EmptyDimension(usize, usize),
    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },
    #[error("non-finite element at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix is numerically singular (pivot {pivot:e} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("cannot decompose an all-zero matrix")]
    Degenerate,
    #[error("unsupported request: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, MatrixError>;

/// A dense `rows x cols` matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row = self.row(i);
            let shown: Vec<String> = row.iter().take(8).map(|x| format!("{x:.6e}")).collect();
            writeln!(f, "  {}{}", shown.join(", "), if self.cols > 8 { ", ..." } else { "" })?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from row-major data, checking the length and that
    /// every element is finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyDimension(rows, cols));
        }
        if data.len() != rows * cols {
            return Err(MatrixError::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(MatrixError::NonFinite(pos / cols, pos % cols));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(MatrixError::Shape {
                    op: "from_rows",
                    left: (i, ncols),
                    right: (i, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(nrows, ncols, data)
    }

    /// Builds an `rows x cols` matrix element by element.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
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
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Column vector.
    pub fn column(values: &[f64]) -> Result<Self> {
        Self::from_vec(values.len(), 1, values.to_vec())
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    fn same_shape(&self, other: &Matrix, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(MatrixError::Shape {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        self.same_shape(other, op)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        self.same_shape(other, "add_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        self.map(|x| x * factor)
    }

    pub fn neg(&self) -> Matrix {
        self.map(|x| -x)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data: out,
        }
    }

    /// Checked matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        mat_mul(self, rhs)
    }

    pub fn frobenius_norm(&self) -> f64 {
        // Scaled accumulation keeps wide dynamic ranges from overflowing.
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let sum: f64 = self.data.iter().map(|x| (x / max) * (x / max)).sum();
        max * sum.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Root-mean-square of the elements.
    pub fn rms(&self) -> f64 {
        self.frobenius_norm() / (self.data.len() as f64).sqrt()
    }

    /// `||self - reference||_F / ||reference||_F`; falls back to the absolute
    /// error when the reference is zero.
    pub fn relative_error(&self, reference: &Matrix) -> Result<f64> {
        let diff = self.sub(reference)?;
        let denom = reference.frobenius_norm();
        Ok(if denom == 0.0 {
            diff.frobenius_norm()
        } else {
            diff.frobenius_norm() / denom
        })
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(MatrixError::Shape {
                op: "hstack",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let cols = self.cols + other.cols;
        Ok(Matrix::from_fn(self.rows, cols, |i, j| {
            if j < self.cols {
                self.get(i, j)
            } else {
                other.get(i, j - self.cols)
            }
        }))
    }

    /// Columns `start..end` as a new matrix.
    pub fn column_range(&self, start: usize, end: usize) -> Result<Matrix> {
        if start >= end || end > self.cols {
            return Err(MatrixError::Unsupported(format!(
                "column range {start}..{end} of a {}-column matrix",
                self.cols
            )));
        }
        Ok(Matrix::from_fn(self.rows, end - start, |i, j| self.get(i, start + j)))
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_range(&self, start: usize, end: usize) -> Result<Matrix> {
        if start >= end || end > self.rows {
            return Err(MatrixError::Unsupported(format!(
                "row range {start}..{end} of a {}-row matrix",
                self.rows
            )));
        }
        Ok(Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        })
    }
}

const BLOCK_K: usize = 128;
const BLOCK_J: usize = 256;

/// Standard matrix product; element `(i, j)` is `sum_k a(i,k) * b(k,j)`.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(MatrixError::Shape {
            op: "mat_mul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (n, inner, m) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0; n * m];
    // Tiled i-k-j loop; the innermost loop is a contiguous axpy over a row
    // block of `b` that stays cache resident across all rows of `a`.
    for kk in (0..inner).step_by(BLOCK_K) {
        let k_end = (kk + BLOCK_K).min(inner);
        for jj in (0..m).step_by(BLOCK_J) {
            let j_end = (jj + BLOCK_J).min(m);
            for i in 0..n {
                let a_row = &a.data[i * inner..(i + 1) * inner];
                let c_row = &mut out[i * m + jj..i * m + j_end];
                for k in kk..k_end {
                    let aik = a_row[k];
                    if aik == 0.0 {
                        continue;
                    }
                    let b_row = &b.data[k * m + jj..k * m + j_end];
                    for (c, &bv) in c_row.iter_mut().zip(b_row) {
                        *c += aik * bv;
                    }
                }
            }
        }
    }
    Ok(Matrix {
        rows: n,
        cols: m,
        data: out,
    })
}

/// Gauss-Jordan inversion with partial pivoting.
pub fn invert(m: &Matrix) -> Result<Matrix> {
    invert_above(m, 0.0)
}

/// Like [`invert`], but also treats pivots up to `floor` as zero. Callers
/// that know the rounding noise of `m` pass it here, since a matrix made
/// entirely of noise passes the relative test.
pub fn invert_above(m: &Matrix, floor: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(MatrixError::NotSquare(m.rows, m.cols));
    }
    let n = m.rows;
    let threshold = (SINGULAR_PIVOT_TOL * m.max_abs()).max(floor);
    let mut work = m.data.clone();
    let mut inv = Matrix::identity(n).data;

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, work[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= threshold || pivot_abs == 0.0 {
            return Err(MatrixError::Singular { col, pivot: pivot_abs });
        }
        if pivot_row != col {
            swap_rows(&mut work, n, col, pivot_row);
            swap_rows(&mut inv, n, col, pivot_row);
        }
        let p = work[col * n + col];
        for j in 0..n {
            work[col * n + j] /= p;
            inv[col * n + j] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = work[r * n + col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                work[r * n + j] -= f * work[col * n + j];
                inv[r * n + j] -= f * inv[col * n + j];
            }
        }
    }
    Ok(Matrix {
        rows: n,
        cols: n,
        data: inv,
    })
}

fn swap_rows(data: &mut [f64], cols: usize, a: usize, b: usize) {
    if a == b {
        return;
    }
    let (lo, hi) = (a.min(b), a.max(b));
    let (head, tail) = data.split_at_mut(hi * cols);
    head[lo * cols..(lo + 1) * cols].swap_with_slice(&mut tail[..cols]);
}

/// Power-of-two factor that brings `x` near unit magnitude; exact to apply.
fn pow2_normalizer(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        2f64.powi(-(x.log2().round() as i32))
    }
}

/// Full-rank decomposition `m = b1 * b2` by Gauss-Jordan elimination with
/// complete pivoting.
///
/// `b2` holds the nonzero rows of the reduced echelon form (full row rank)
/// and `b1` the pivot columns of `m` (full column rank). Rows and columns are
/// first equilibrated by powers of two so the pivot threshold
/// `tol * max|entry|` is meaningful for entries spanning many decades; the
/// scaling is undone exactly afterwards.
pub fn full_rank_decompose(m: &Matrix, tol: f64) -> Result<(Matrix, Matrix)> {
    if m.is_zero() {
        return Err(MatrixError::Degenerate);
    }
    let (rows, cols) = m.shape();

    let row_scale: Vec<f64> = (0..rows)
        .map(|i| pow2_normalizer(m.row(i).iter().fold(0.0, |a: f64, x| a.max(x.abs()))))
        .collect();
    let mut work: Vec<f64> = m
        .data
        .iter()
        .enumerate()
        .map(|(idx, &x)| x * row_scale[idx / cols])
        .collect();
    let col_scale: Vec<f64> = (0..cols)
        .map(|j| pow2_normalizer((0..rows).fold(0.0, |a: f64, i| a.max(work[i * cols + j].abs()))))
        .collect();
    for (idx, x) in work.iter_mut().enumerate() {
        *x *= col_scale[idx % cols];
    }

    let threshold = tol * work.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    let mut pivots = Vec::new();
    let mut is_pivot = vec![false; cols];
    for lead in 0..rows.min(cols) {
        // Complete pivoting: the largest remaining entry picks both the row
        // and the column, which keeps the echelon rows bounded.
        let mut best = (lead, 0, -1.0f64);
        for r in lead..rows {
            for (c, &flag) in is_pivot.iter().enumerate() {
                let v = work[r * cols + c].abs();
                if !flag && v > best.2 {
                    best = (r, c, v);
                }
            }
        }
        let (pivot_row, col, pivot_abs) = best;
        if pivot_abs <= threshold {
            break;
        }
        swap_rows(&mut work, cols, lead, pivot_row);
        let p = work[lead * cols + col];
        for x in &mut work[lead * cols..(lead + 1) * cols] {
            *x /= p;
        }
        let (before, rest) = work.split_at_mut(lead * cols);
        let (pivot_slice, after) = rest.split_at_mut(cols);
        let eliminate = |row: &mut [f64]| {
            let f = row[col];
            if f != 0.0 {
                for (x, &pv) in row.iter_mut().zip(pivot_slice.iter()) {
                    *x -= f * pv;
                }
            }
        };
        before.chunks_mut(cols).for_each(eliminate);
        after.chunks_mut(cols).for_each(eliminate);
        pivots.push(col);
        is_pivot[col] = true;
    }

    let rank = pivots.len();
    let b1 = Matrix::from_fn(rows, rank, |i, k| m.get(i, pivots[k]) * col_scale[pivots[k]]);
    let b2 = Matrix::from_fn(rank, cols, |k, j| {
        if j == pivots[k] {
            1.0 / col_scale[j]
        } else if is_pivot[j] {
            0.0
        } else {
            work[k * cols + j] / col_scale[j]
        }
    });
    Ok((b1, b2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn product_of_small_matrices() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        assert_eq!(mat_mul(&a, &b).unwrap(), m(&[&[19.0, 22.0], &[43.0, 50.0]]));
    }

    #[test]
    fn identity_and_zero_products() {
        let x = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        assert_eq!(mat_mul(&Matrix::identity(3), &x).unwrap(), x);
        let z = Matrix::zeros(4, 4);
        let y = Matrix::from_fn(4, 4, |i, j| (i + 2 * j) as f64);
        assert_eq!(mat_mul(&z, &y).unwrap(), z);
    }

    #[test]
    fn product_shape_mismatch() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(mat_mul(&a, &a), Err(MatrixError::Shape { .. })));
    }

    #[test]
    fn blocked_product_matches_naive_sum() {
        // Crosses both block boundaries.
        let a = Matrix::from_fn(7, 300, |i, j| ((i * 31 + j * 17) % 13) as f64 - 6.0);
        let b = Matrix::from_fn(300, 260, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let c = mat_mul(&a, &b).unwrap();
        for i in 0..7 {
            for j in [0, 1, 255, 256, 259] {
                let naive: f64 = (0..300).map(|k| a.get(i, k) * b.get(k, j)).sum();
                assert_eq!(c.get(i, j), naive);
            }
        }
    }

    #[test]
    fn rejects_non_finite_and_bad_lengths() {
        assert_eq!(
            Matrix::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(MatrixError::NonFinite(0, 1))
        );
        assert!(matches!(
            Matrix::from_vec(2, 2, vec![1.0]),
            Err(MatrixError::DataLength { .. })
        ));
        assert!(matches!(
            Matrix::from_vec(0, 2, vec![]),
            Err(MatrixError::EmptyDimension(0, 2))
        ));
    }

    #[test]
    fn invert_identity_and_diagonal() {
        assert_eq!(invert(&Matrix::identity(5)).unwrap(), Matrix::identity(5));
        let d = Matrix::from_diag(&[2.0, 4.0]);
        assert_eq!(invert(&d).unwrap(), Matrix::from_diag(&[0.5, 0.25]));
    }

    #[test]
    fn invert_detects_singularity() {
        let s = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(invert(&s), Err(MatrixError::Singular { .. })));
        assert!(matches!(
            invert(&Matrix::zeros(2, 3)),
            Err(MatrixError::NotSquare(2, 3))
        ));
    }

    #[test]
    fn frd_of_identity() {
        let (b1, b2) = full_rank_decompose(&Matrix::identity(4), RANK_TOL).unwrap();
        assert_eq!(b1.shape(), (4, 4));
        assert_eq!(b2.shape(), (4, 4));
        assert_eq!(mat_mul(&b1, &b2).unwrap(), Matrix::identity(4));
    }

    #[test]
    fn frd_of_outer_product_has_rank_one() {
        let u = Matrix::column(&[1.0, -2.0, 3.0]).unwrap();
        let v = Matrix::column(&[0.5, 4.0, -1.0]).unwrap();
        let outer = mat_mul(&u, &v.transpose()).unwrap();
        let (b1, b2) = full_rank_decompose(&outer, RANK_TOL).unwrap();
        assert_eq!(b1.shape(), (3, 1));
        assert_eq!(b2.shape(), (1, 3));
        assert!(mat_mul(&b1, &b2).unwrap().relative_error(&outer).unwrap() < 1e-15);
    }

    #[test]
    fn frd_rejects_zero_matrix() {
        assert_eq!(
            full_rank_decompose(&Matrix::zeros(3, 2), RANK_TOL),
            Err(MatrixError::Degenerate)
        );
    }

    #[test]
    fn frd_handles_zero_columns_and_rows() {
        let x = m(&[&[0.0, 2.0, 0.0, 1.0], &[0.0, 0.0, 0.0, 0.0], &[0.0, 4.0, 0.0, 3.0]]);
        let (b1, b2) = full_rank_decompose(&x, RANK_TOL).unwrap();
        assert_eq!(b1.cols(), 2);
        assert!(mat_mul(&b1, &b2).unwrap().relative_error(&x).unwrap() < 1e-15);
    }

    #[test]
    fn frobenius_and_relative_error() {
        let x = m(&[&[3.0, 4.0]]);
        assert_eq!(x.frobenius_norm(), 5.0);
        let y = m(&[&[3.0, 5.0]]);
        assert!((y.relative_error(&x).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn stacking_and_slicing() {
        let a = m(&[&[1.0], &[2.0]]);
        let b = m(&[&[3.0, 4.0], &[5.0, 6.0]]);
        let s = a.hstack(&b).unwrap();
        assert_eq!(s, m(&[&[1.0, 3.0, 4.0], &[2.0, 5.0, 6.0]]));
        assert_eq!(s.column_range(1, 3).unwrap(), b);
        assert_eq!(s.row_range(1, 2).unwrap(), m(&[&[2.0, 5.0, 6.0]]));
        assert_eq!(s.transpose().shape(), (3, 2));
    }
}
