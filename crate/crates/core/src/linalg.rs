//! Small dense linear algebra used throughout the crate.
//!
//! Everything here is sized for desk-scale networks (a few hundred unknowns
//! at most). All reductions run left to right in index order so repeated
//! runs produce bit-identical results.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(
                format!("{} entries", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from nested rows. An empty outer vector is a 0x0 matrix.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::dims(
                    format!("{ncols} columns"),
                    format!("{} columns in row {i}", r.len()),
                ));
            }
            data.extend(r);
        }
        Ok(Mat {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Mat::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::dims(
                format!("{} rows on the right operand", self.cols),
                format!("{}", other.rows),
            ));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dims(
                format!("vector of length {}", self.cols),
                format!("{}", x.len()),
            ));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::dims(
                format!("vector of length {}", self.rows),
                format!("{}", x.len()),
            ));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        Ok(out)
    }

    /// Gram matrix `selfᵀ self`.
    pub fn gram(&self) -> Mat {
        let mut g = Mat::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                let ri = row[i];
                for j in 0..self.cols {
                    g[(i, j)] += ri * row[j];
                }
            }
        }
        g
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.check_same_shape(other)?;
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.check_same_shape(other)?;
        Ok(Mat {
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

    fn check_same_shape(&self, other: &Mat) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// First asymmetric entry, compared with absolute tolerance `tol`.
    pub fn find_asymmetry(&self, tol: f64) -> Option<(usize, usize)> {
        if !self.is_square() {
            return Some((0, 0));
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Column means, i.e. the average of the rows.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for i in 0..self.rows {
            axpy(1.0, self.row(i), &mut mean);
        }
        let inv = 1.0 / self.rows as f64;
        mean.iter_mut().for_each(|v| *v *= inv);
        mean
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Mat::from_rows(rows)
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Self {
        m.to_rows()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Mat,
}

impl Cholesky {
    pub fn new(a: &Mat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims(
                "square matrix",
                format!("{}x{}", a.rows(), a.cols()),
            ));
        }
        let n = a.rows();
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::dims(
                format!("rhs of length {n}"),
                format!("{}", b.len()),
            ));
        }
        let l = &self.l;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= l[(i, k)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        Ok(z)
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Mat,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigen-solver for symmetric matrices.
///
/// The off-diagonal mass is driven below `1e-15` of the Frobenius norm, which
/// is well inside the 1e-10 relative tolerance the spectral quantities need.
pub fn symmetric_eigen(a: &Mat) -> Result<SymmetricEigen> {
    if !a.is_square() {
        return Err(Error::dims(
            "square matrix",
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    if let Some((row, col)) = a.find_asymmetry(1e-12 * scale) {
        return Err(Error::NotSymmetric { row, col });
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let n = a.rows();
    let mut m = a.clone();
    // Symmetrize exactly so rotations act on a truly symmetric matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let mut v = Mat::identity(n);
    let total = m.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    symmetric_eigen(a).map(|e| e.values)
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration with Rayleigh quotients. Stops once the quotient changes by less
/// than `rel_tol` (relative) between iterations.
pub fn power_iteration_max(a: &Mat, rel_tol: f64, max_iter: usize) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::dims(
            "square matrix",
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(0.0);
    }
    // Deterministic start with no special alignment to coordinate axes.
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64)
        .collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut lambda = 0.0_f64;
    let mut stable_steps = 0;
    for _ in 0..max_iter {
        let y = a.matvec(&x)?;
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        let next = dot(&x, &y);
        x = y.iter().map(|v| v / ny).collect();
        if (next - lambda).abs() <= rel_tol * next.abs() {
            stable_steps += 1;
            // Two consecutive quiet steps guard against a lucky plateau.
            if stable_steps >= 2 {
                return Ok(next);
            }
        } else {
            stable_steps = 0;
        }
        lambda = next;
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Mat::from_rows(vec![
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let b = vec![1.0, -2.0, 0.5];
        let x = Cholesky::new(&a).unwrap().solve(&b).unwrap();
        let back = a.matvec(&x).unwrap();
        for (u, v) in back.iter().zip(&b) {
            assert_relative_eq!(u, v, epsilon = 1e-14);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(Cholesky::new(&a).unwrap_err(), Error::NotPositiveDefinite);
    }

    #[test]
    fn jacobi_on_known_spectrum() {
        let a = Mat::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = symmetric_eigen(&a).unwrap();
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e.values[1], 3.0, epsilon = 1e-14);
        let v0 = [e.vectors[(0, 0)], e.vectors[(1, 0)]];
        assert_relative_eq!(
            v0[0].abs(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-14
        );
        assert_relative_eq!(v0[0], -v0[1], epsilon = 1e-14);
    }

    #[test]
    fn jacobi_rejects_asymmetric() {
        let a = Mat::from_rows(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            symmetric_eigen(&a),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn power_iteration_diag() {
        let a = Mat::from_diag(&[1.0, 9.0, 4.0]);
        assert_relative_eq!(
            power_iteration_max(&a, 1e-13, 100_000).unwrap(),
            9.0,
            max_relative = 1e-10
        );
        assert_eq!(
            power_iteration_max(&Mat::zeros(3, 3), 1e-10, 10).unwrap(),
            0.0
        );
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Mat::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn tr_matvec_matches_transpose() {
        let a = Mat::from_rows(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let x = [0.5, -1.0];
        assert_eq!(a.tr_matvec(&x).unwrap(), a.transpose().matvec(&x).unwrap());
    }
}
