//! Minimal dense matrix support for the statistical side of the crate.
//!
//! Everything here works on small matrices (p <= ~12), so plain row-major
//! storage and textbook algorithms are all that is needed. Positive
//! definiteness is tested by attempting a Cholesky factorization.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
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
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::InvalidInput("matrix needs at least one row".into()));
        }
        let c = rows[0].len();
        if c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged or empty matrix rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= factor;
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v -= w;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Maximum relative asymmetry `|a_ij - a_ji| / scale`.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let scale = self.max_abs().max(1.0);
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs() / scale);
            }
        }
        worst
    }

    /// Lower-triangular Cholesky factor, or `None` when the matrix is not
    /// (numerically) positive definite.
    pub fn cholesky(&self) -> Option<Matrix> {
        assert!(self.is_square());
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self[(i, j)];
                for k in 0..j {
                    sum -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return None;
                    }
                    l[(i, i)] = sum.sqrt();
                } else {
                    l[(i, j)] = sum / l[(j, j)];
                }
            }
        }
        Some(l)
    }

    /// Solves `self * x = b` for symmetric positive definite `self`.
    pub fn solve_spd(&self, b: &[f64]) -> Option<Vec<f64>> {
        let l = self.cholesky()?;
        Some(l.solve_cholesky(b))
    }

    /// Given `self` = lower Cholesky factor L, solves `L L^T x = b`.
    pub fn solve_cholesky(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rows;
        assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self[(i, k)] * y[k];
            }
            y[i] = sum / self[(i, i)];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum -= self[(k, i)] * x[k];
            }
            x[i] = sum / self[(i, i)];
        }
        x
    }

    /// `log det` of the SPD matrix with the given lower Cholesky factor.
    pub fn log_det_from_cholesky(l: &Matrix) -> f64 {
        (0..l.rows).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
    }

    /// Numerical rank by Gaussian elimination with partial pivoting.
    pub fn rank(&self, tol: f64) -> usize {
        let mut a = self.clone();
        let scale = a.max_abs();
        if scale == 0.0 {
            return 0;
        }
        let threshold = tol * scale;
        let (m, n) = (a.rows, a.cols);
        let mut rank = 0;
        for col in 0..n {
            let (best_row, best_val) = (rank..m)
                .map(|r| (r, a[(r, col)].abs()))
                .fold((rank, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best_val <= threshold {
                continue;
            }
            for j in 0..n {
                let tmp = a[(rank, j)];
                a[(rank, j)] = a[(best_row, j)];
                a[(best_row, j)] = tmp;
            }
            for r in (rank + 1)..m {
                let f = a[(r, col)] / a[(rank, col)];
                for j in col..n {
                    let delta = f * a[(rank, j)];
                    a[(r, j)] -= delta;
                }
            }
            rank += 1;
            if rank == m {
                break;
            }
        }
        rank
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_round_trip() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = a.cholesky().unwrap();
        let back = l.matmul(&l.transpose());
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(back[(i, j)], a[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn spd_solve() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let x = a.solve_spd(&[8.0, 7.0]).unwrap();
        assert_relative_eq!(4.0 * x[0] + 2.0 * x[1], 8.0, epsilon = 1e-12);
        assert_relative_eq!(2.0 * x[0] + 3.0 * x[1], 7.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_detects_collinearity() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(a.rank(1e-10), 1);
        assert_eq!(Matrix::identity(3).rank(1e-10), 3);
        assert_eq!(Matrix::zeros(2, 2).rank(1e-10), 0);
    }
}
