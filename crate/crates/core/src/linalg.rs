//! Small dense linear algebra: row-major matrices, Householder QR least
//! squares, and a Jacobi eigen-solver for symmetric matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
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

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
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

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Keeps only the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                out[(i, jj)] = self[(i, j)];
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of an ordinary least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub rank: usize,
}

/// Solves `min ‖X b − y‖²` by Householder QR. Fails if `X` is rank deficient.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<LeastSquares> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::Numeric(
            "response length does not match design rows".into(),
        ));
    }
    if p > n {
        return Err(Error::RankDeficient(alloc::format!(
            "{p} parameters but only {n} observations"
        )));
    }
    let mut a = x.clone();
    let mut qty = y.to_vec();
    let col_scale: f64 = (0..p)
        .map(|j| sqrt((0..n).map(|i| a[(i, j)] * a[(i, j)]).sum()))
        .fold(0.0, f64::max);
    let mut diag = vec![0.0; p];

    for k in 0..p {
        let norm = sqrt((k..n).map(|i| a[(i, k)] * a[(i, k)]).sum());
        if norm <= 1e-10 * col_scale.max(1.0) {
            return Err(Error::RankDeficient(alloc::format!(
                "column {k} is linearly dependent"
            )));
        }
        let alpha = if a[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..p {
                let dot: f64 = (k..n).map(|i| v[i - k] * a[(i, j)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in k..n {
                    a[(i, j)] -= f * v[i - k];
                }
            }
            let dot: f64 = (k..n).map(|i| v[i - k] * qty[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                qty[i] -= f * v[i - k];
            }
        }
        diag[k] = a[(k, k)];
    }

    // Back substitution on R b = (Qᵀy)[..p].
    let mut b = vec![0.0; p];
    for k in (0..p).rev() {
        let s: f64 = ((k + 1)..p).map(|j| a[(k, j)] * b[j]).sum();
        b[k] = (qty[k] - s) / diag[k];
    }
    let fitted = x.mul_vec(&b);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    // ‖Qᵀy‖² beyond row p is the residual sum of squares; it avoids the
    // cancellation of summing squared residuals for near-exact fits.
    let rss: f64 = qty[p..].iter().map(|v| v * v).sum();
    Ok(LeastSquares {
        coefficients: b,
        fitted,
        residuals,
        rss,
        rank: p,
    })
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matrix whose columns are eigenvectors.
pub fn symmetric_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Inverse of a symmetric positive (semi-)definite matrix via its
/// eigen-decomposition. Eigenvalues at or below `rel_floor × λ_max` are
/// dropped (pseudo-inverse); their count is returned alongside.
pub fn spd_pseudo_inverse(m: &Matrix, rel_floor: f64) -> (Matrix, usize) {
    let n = m.rows();
    let (vals, vecs) = symmetric_eigen(m);
    let max = vals.iter().copied().fold(0.0, f64::max);
    let mut out = Matrix::zeros(n, n);
    let mut dropped = 0;
    for (k, &lambda) in vals.iter().enumerate() {
        if !(lambda > rel_floor * max) || max <= 0.0 {
            dropped += 1;
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += vecs[(i, k)] * vecs[(j, k)] / lambda;
            }
        }
    }
    (out, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_fit() {
        let x = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 1.0], &[1.0, 2.0], &[1.0, 3.0]]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = least_squares(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-24);
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let x = Matrix::from_rows(&[
            &[1.0, 0.3, 2.0],
            &[1.0, 1.1, -1.0],
            &[1.0, 2.7, 0.5],
            &[1.0, 3.2, 4.0],
            &[1.0, -0.4, 1.5],
        ]);
        let y = [2.0, 0.5, 3.3, 7.1, -1.0];
        let fit = least_squares(&x, &y).unwrap();
        let xt = x.transpose();
        for g in xt.mul_vec(&fit.residuals) {
            assert!(g.abs() < 1e-12);
        }
        let direct: f64 = fit.residuals.iter().map(|r| r * r).sum();
        assert!((direct - fit.rss).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_detected() {
        let x = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        assert!(matches!(
            least_squares(&x, &[1.0, 2.0, 3.0]),
            Err(Error::RankDeficient(_))
        ));
        let x = Matrix::from_rows(&[&[1.0, 2.0]]);
        assert!(matches!(
            least_squares(&x, &[1.0]),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn eigen_and_inverse() {
        let m = Matrix::from_rows(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 2.0]]);
        let (inv, dropped) = spd_pseudo_inverse(&m, 1e-14);
        assert_eq!(dropped, 0);
        let prod = m.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - e).abs() < 1e-12);
            }
        }
        let (vals, _) = symmetric_eigen(&m);
        let trace: f64 = vals.iter().sum();
        assert!((trace - 9.0).abs() < 1e-12);
    }
}
