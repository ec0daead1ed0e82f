//! Row-major sample matrices and the small dense solves the toolkit needs.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at column {col})")]
    NotPositiveDefinite { col: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Dense row-major matrix of `f64`; rows are samples, columns coordinates.
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

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    /// 1-column matrix from a scalar sample vector.
    pub fn column(xs: &[f64]) -> Self {
        Matrix {
            rows: xs.len(),
            cols: 1,
            data: xs.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    /// Rows `[lo, hi)` as a new matrix.
    pub fn slice_rows(&self, lo: usize, hi: usize) -> Matrix {
        assert!(lo <= hi && hi <= self.rows);
        Matrix {
            rows: hi - lo,
            cols: self.cols,
            data: self.data[lo * self.cols..hi * self.cols].to_vec(),
        }
    }

    /// Stack `self` on top of `other`.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Squared Euclidean distance between two points.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Sample mean of a slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator `n - 1`).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    assert!(n >= 2, "variance needs at least two points");
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Median with the even-count convention "average of the two central order
/// statistics". The input is copied and sorted.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Solve the symmetric positive-definite system `A x = b` in place via
/// Cholesky. `a` is row-major `n × n` and is overwritten by the factor.
pub fn cholesky_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> Result<(), LinalgError> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    // Factor A = L L^T, L stored in the lower triangle.
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { col: j, pivot: d });
        }
        let l = d.sqrt();
        a[j * n + j] = l;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    // Forward solve L y = b.
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    // Back solve L^T x = y.
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

/// Crude 2-norm condition estimate of a symmetric positive-definite matrix:
/// power iteration for the largest eigenvalue and inverse iteration (through
/// an already-computed Cholesky solve) for the smallest.
pub fn spd_condition_estimate(a: &[f64], n: usize) -> f64 {
    let mut chol = a.to_vec();
    let mut probe = vec![1.0; n];
    if cholesky_solve(&mut chol, n, &mut probe).is_err() {
        return f64::INFINITY;
    }
    let matvec = |v: &[f64], out: &mut Vec<f64>| {
        out.clear();
        for i in 0..n {
            out.push(dot(&a[i * n..(i + 1) * n], v));
        }
    };
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
    let mut w = Vec::with_capacity(n);
    let mut lam_max = 0.0;
    for _ in 0..30 {
        matvec(&v, &mut w);
        lam_max = norm(&w);
        if lam_max == 0.0 {
            return f64::INFINITY;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / lam_max;
        }
    }
    // Inverse iteration reusing the factor: solve via fresh factorization once.
    let mut lam_min_inv = 0.0;
    let mut u: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 1.3).cos()).collect();
    for _ in 0..30 {
        let mut rhs = u.clone();
        let mut fac = a.to_vec();
        if cholesky_solve(&mut fac, n, &mut rhs).is_err() {
            return f64::INFINITY;
        }
        lam_min_inv = norm(&rhs);
        for (ui, ri) in u.iter_mut().zip(&rhs) {
            *ui = ri / lam_min_inv;
        }
    }
    lam_max * lam_min_inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[1.0]), 1.0);
    }

    #[test]
    fn cholesky_solves_spd_system() {
        // A = M^T M + I for a fixed M.
        let n = 4;
        let m = [
            1.0, 2.0, 0.0, 1.0, 0.5, 1.0, 3.0, -1.0, 2.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
        ];
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    a[i * n + j] += m[k * n + i] * m[k * n + j];
                }
            }
            a[i * n + i] += 1.0;
        }
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = dot(&a[i * n..(i + 1) * n], &x_true);
        }
        let mut fac = a.clone();
        cholesky_solve(&mut fac, n, &mut b).unwrap();
        for i in 0..n {
            assert!((b[i] - x_true[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = vec![1.0, 2.0, 2.0, 1.0]; // eigenvalues 3, -1
        let mut b = vec![1.0, 1.0];
        assert!(cholesky_solve(&mut a, 2, &mut b).is_err());
    }

    #[test]
    fn condition_estimate_diagonal() {
        let n = 3;
        let a = [100.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.01];
        let c = spd_condition_estimate(&a, n);
        assert!((c / 1e4 - 1.0).abs() < 0.05, "cond {c}");
    }

    #[test]
    fn matrix_slicing() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        assert_eq!(m.slice_rows(1, 3).row(0), &[3.0, 4.0]);
        assert_eq!(m.vstack(&m).rows(), 6);
        assert_eq!(m.select_rows(&[2, 0]).row(0), &[5.0, 6.0]);
    }
}
