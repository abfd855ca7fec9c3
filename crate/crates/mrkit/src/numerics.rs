//! Minimal dense-matrix substrate shared by the rest of the toolkit.
//!
//! Everything is `f64` and row-major; performance is deliberately plain
//! (no blocking, no BLAS) because all consumers operate at desk scale.
//! All operations are pure functions of their inputs.

use crate::error::{Error, Result};

/// Input clamp applied before `exp` in [`sigmoid`] so saturated logits stay
/// finite instead of overflowing.
pub const SIGMOID_CLAMP: f64 = 500.0;

/// Dense row-major matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from an explicit shape and row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::from_vec",
                format!(
                    "{rows}x{cols} needs {} values, got {}",
                    rows * cols,
                    data.len()
                ),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows, which must all have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::shape(
                    "Matrix::from_rows",
                    format!("row 0 has {n_cols} columns but row {i} has {}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    /// Builds a single-row matrix from a flat vector.
    pub fn row_vector(data: Vec<f64>) -> Self {
        Matrix {
            rows: 1,
            cols: data.len(),
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Row-major backing slice.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                "Matrix::add",
                format!(
                    "{}x{} vs {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        self.map(|x| x * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Errors unless every entry is finite; `context` names the offending input.
    pub fn check_finite(&self, op: &'static str, context: &str) -> Result<()> {
        for (idx, x) in self.data.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    op,
                    detail: format!(
                        "{context}[{},{}] = {x}",
                        idx / self.cols.max(1),
                        idx % self.cols.max(1)
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Standard matrix product. Requires `a.cols == b.rows`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} times {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aik * bv;
            }
        }
    }
    Ok(out)
}

/// Row-wise softmax with per-row max subtraction.
///
/// Each output row sums to 1 within 1e-12 for finite input.
pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows {
        let row = out.row_mut(r);
        if row.is_empty() {
            continue;
        }
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    out
}

/// Elementwise logistic function on the clamped input.
pub fn sigmoid(m: &Matrix) -> Matrix {
    m.map(sigmoid_scalar)
}

/// Logistic function; the input is clamped to `[-SIGMOID_CLAMP, SIGMOID_CLAMP]`
/// before exponentiation.
pub fn sigmoid_scalar(x: f64) -> f64 {
    let x = x.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    1.0 / (1.0 + (-x).exp())
}

/// Scales every row to unit Euclidean norm.
///
/// A row of zero norm is a degenerate embedding and yields an error naming
/// the row index.
pub fn l2_normalize_rows(m: &Matrix) -> Result<Matrix> {
    let mut out = m.clone();
    for r in 0..out.rows {
        let norm = row_norm(out.row(r));
        if norm == 0.0 {
            return Err(Error::ZeroNorm {
                op: "l2_normalize_rows",
                row: r,
            });
        }
        for x in out.row_mut(r) {
            *x /= norm;
        }
    }
    Ok(out)
}

pub(crate) fn row_norm(row: &[f64]) -> f64 {
    row.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn matmul_identity_is_noop() {
        let m = Matrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ])
        .unwrap();
        assert_eq!(matmul(&Matrix::identity(3), &m).unwrap(), m);
        assert_eq!(matmul(&m, &Matrix::identity(3)).unwrap(), m);
    }

    #[test]
    fn matmul_small_example() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_zero_annihilates() {
        let m = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        let z = Matrix::zeros(2, 2);
        assert_eq!(matmul(&z, &m).unwrap(), z);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        let err = matmul(&a, &b).unwrap_err().to_string();
        assert!(err.contains("2x3"), "{err}");
        assert!(err.contains("2x2"), "{err}");
    }

    #[test]
    fn matmul_matches_naive_oracle() {
        // Independent route: plain dot-product form, different summation order.
        fn naive(a: &Matrix, b: &Matrix) -> Matrix {
            Matrix::from_fn(a.rows(), b.cols(), |i, j| {
                (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
            })
        }
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..100 {
            let a = Matrix::from_fn(5, 5, |_, _| next());
            let b = Matrix::from_fn(5, 5, |_, _| next());
            let got = matmul(&a, &b).unwrap();
            let want = naive(&a, &b);
            for (g, w) in got.data().iter().zip(want.data()) {
                assert_abs_diff_eq!(g, w, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn softmax_uniform_row() {
        let m = softmax_rows(&Matrix::row_vector(vec![0.0, 0.0, 0.0]));
        for &x in m.data() {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn softmax_no_overflow_on_large_logits() {
        let m = softmax_rows(&Matrix::row_vector(vec![1000.0, 1000.0]));
        assert!(m.is_finite());
        assert_abs_diff_eq!(m.get(0, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.get(0, 1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn softmax_quarter_three_quarters() {
        let m = softmax_rows(&Matrix::row_vector(vec![0.0, 3.0f64.ln()]));
        assert_abs_diff_eq!(m.get(0, 0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(m.get(0, 1), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert!(sigmoid_scalar(50.0) >= 1.0 - 1e-12);
        assert_abs_diff_eq!(sigmoid_scalar(3.0f64.ln()), 0.75, epsilon = 1e-15);
        assert!(sigmoid_scalar(1e9).is_finite());
        assert!(sigmoid_scalar(-1e9) > 0.0);
    }

    #[test]
    fn l2_normalize_three_four_five() {
        let m = l2_normalize_rows(&Matrix::row_vector(vec![3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(m.get(0, 0), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(m.get(0, 1), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn l2_normalize_zero_row_reports_index() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        match l2_normalize_rows(&m) {
            Err(Error::ZeroNorm { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected zero-norm error, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn softmax_shift_invariant(
            values in proptest::collection::vec(-50.0f64..50.0, 1..8),
            shift in -100.0f64..100.0,
        ) {
            let base = softmax_rows(&Matrix::row_vector(values.clone()));
            let shifted = softmax_rows(&Matrix::row_vector(
                values.iter().map(|v| v + shift).collect(),
            ));
            for (a, b) in base.data().iter().zip(shifted.data()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn softmax_rows_sum_to_one(
            values in proptest::collection::vec(-100.0f64..100.0, 1..10),
        ) {
            let m = softmax_rows(&Matrix::row_vector(values));
            let total: f64 = m.data().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn l2_normalize_idempotent(
            values in proptest::collection::vec(-10.0f64..10.0, 2..6),
        ) {
            prop_assume!(values.iter().any(|v| v.abs() > 1e-6));
            let once = l2_normalize_rows(&Matrix::row_vector(values)).unwrap();
            let twice = l2_normalize_rows(&once).unwrap();
            for (a, b) in once.data().iter().zip(twice.data()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn sigmoid_stays_positive_and_bounded(x in -1e6f64..1e6) {
            let y = sigmoid_scalar(x);
            // Saturated logits round to exactly 1.0 in f64; the lower end
            // stays strictly positive thanks to the input clamp.
            prop_assert!(y > 0.0 && y <= 1.0);
            if x.abs() <= 30.0 {
                prop_assert!(y < 1.0);
            }
        }
    }
}
