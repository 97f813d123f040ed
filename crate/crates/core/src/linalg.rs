//! Dense vectors and matrices, plus the spectral radius estimate used by the
//! block operators.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 10_000;

/// A point of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Checked constructor: at least one entry, all finite.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("vector must have dimension >= 1"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("vector entries must be finite"));
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
}

/// `a - b`
pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    Vector(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid("matrix data length does not match rows * cols"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
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

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows `range` as a new matrix.
    pub fn row_block(&self, range: core::ops::Range<usize>) -> Matrix {
        Matrix {
            rows: range.len(),
            cols: self.cols,
            data: self.data[range.start * self.cols..range.end * self.cols].to_vec(),
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vector {
        debug_assert_eq!(x.len(), self.cols);
        Vector((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Aᵀ y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vector {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, self.row(i), &mut out);
        }
        Vector(out)
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::invalid("inner dimensions do not match"));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                axpy(a, orow, &mut out.data[i * other.cols..(i + 1) * other.cols]);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Largest `|B_ij - B_ji|` relative to the largest entry magnitude.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }
}

/// Largest eigenvalue of a symmetric positive-semidefinite matrix by power
/// iteration with Rayleigh quotients.
///
/// The start vector is all-ones plus a fixed pseudo-random perturbation, so
/// it is never exactly orthogonal to a structured dominant eigenvector. If
/// the iterate collapses to zero (start vector in the null space) it is
/// re-randomized from the same deterministic stream.
pub fn spectral_radius_psd(b: &Matrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !b.is_square() {
        return Err(Error::invalid("spectral radius needs a square matrix"));
    }
    if b.relative_asymmetry() > 1e-12 {
        return Err(Error::invalid("spectral radius needs a symmetric matrix"));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::invalid("tol and max_iter must be positive"));
    }
    let n = b.rows();
    if b.as_slice().iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }

    let mut rng = SplitMix64::new(0x5EC7_4A1D);
    let mut v: Vector = Vector((0..n).map(|_| 1.0 + 0.5 * rng.next_f64()).collect());
    normalize(&mut v);

    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = b.mul_vec(&v);
        let w_norm = norm(&w);
        if w_norm == 0.0 {
            v = Vector((0..n).map(|_| rng.uniform(-1.0, 1.0)).collect());
            normalize(&mut v);
            continue;
        }
        // Rayleigh quotient of the unit vector v.
        let theta = dot(&v, &w);
        let mut residual = w.clone();
        axpy(-theta, &v, &mut residual);
        estimate = theta;
        let scale = theta.abs().max(1.0);
        v = w;
        for x in v.iter_mut() {
            *x /= w_norm;
        }
        if norm(&residual) <= tol * scale {
            return Ok(theta.max(0.0));
        }
    }
    Err(Error::ConvergenceFailure { last_estimate: estimate, iterations: max_iter })
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_radius_one() {
        let r = spectral_radius_psd(&Matrix::identity(2), SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_radius() {
        let r = spectral_radius_psd(&Matrix::diagonal(&[1.0, 4.0]), SPECTRAL_TOL, SPECTRAL_MAX_ITER)
            .unwrap();
        assert!((r - 4.0).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix() {
        let r = spectral_radius_psd(&Matrix::zeros(3, 3), SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn ones_start_is_not_trapped_in_a_lower_eigenspace() {
        // (1,1) is an eigenvector with eigenvalue 2; the dominant one is (1,-1) with 4.
        let b = Matrix::from_rows(&[&[3.0, -1.0], &[-1.0, 3.0]]).unwrap();
        let r = spectral_radius_psd(&b, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!((r - 4.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn rejects_bad_input() {
        let rect = Matrix::zeros(2, 3);
        assert!(matches!(
            spectral_radius_psd(&rect, SPECTRAL_TOL, SPECTRAL_MAX_ITER),
            Err(Error::InvalidArgument(_))
        ));
        let asym = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(
            spectral_radius_psd(&asym, SPECTRAL_TOL, SPECTRAL_MAX_ITER),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn reports_non_convergence() {
        // Two nearly equal dominant eigenvalues and one iteration.
        let b = Matrix::diagonal(&[1.0, 0.999_999, 0.5]);
        match spectral_radius_psd(&b, 1e-14, 1) {
            Err(Error::ConvergenceFailure { last_estimate, iterations }) => {
                assert_eq!(iterations, 1);
                assert!(last_estimate > 0.5 && last_estimate <= 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vector_constructor_checks() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![f64::NAN]).is_err());
        assert!(Vector::new(vec![1.0]).is_ok());
    }

    #[test]
    fn matrix_products() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]).unwrap();
        assert_eq!(a.mul_vec(&[1.0, 1.0]).as_slice(), &[3.0, 7.0, 11.0]);
        assert_eq!(a.tr_mul_vec(&[1.0, 0.0, 1.0]).as_slice(), &[6.0, 8.0]);
        let ata = a.transpose().mul(&a).unwrap();
        assert_eq!(ata.as_slice(), &[35.0, 44.0, 44.0, 56.0]);
        assert_eq!(a.row_block(1..3).row(0), &[3.0, 4.0]);
    }
}
