use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{shape, Result};

pub type C64 = nalgebra::Complex<f64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense complex matrix. Row-major in its external representation.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

/// Spectrum of a Hermitian matrix, eigenvalues ascending, eigenvectors as
/// matching columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(shape("matrix must have at least one row and column"));
        }
        if entries.len() != rows * cols {
            return Err(shape(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO })
    }

    /// `|ket⟩⟨ket|`, without normalisation.
    pub fn outer(ket: &[C64]) -> Self {
        let n = ket.len();
        Self::from_fn(n, n, |i, j| ket[i] * ket[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.0[(i, j)] = value;
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |m[i][j] - conj(m[j][i])|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.rows();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                err = err.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        err
    }

    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    /// Eigendecomposition of the Hermitian part of `self`.
    pub fn eigh(&self) -> HermitianEigen {
        let eig = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let n = self.rows();
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
        HermitianEigen {
            values,
            vectors: Self(vectors),
        }
    }

    /// Eigenvalues only, ascending.
    pub fn eigvalsh(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.0.singular_values().iter().copied().collect()
    }

    /// `V diag(f(λ)) V†` for a Hermitian eigensystem.
    pub fn from_spectrum(eig: &HermitianEigen, f: impl Fn(f64) -> f64) -> Self {
        let n = eig.values.len();
        let weights: Vec<f64> = eig.values.iter().map(|&v| f(v)).collect();
        let v = &eig.vectors.0;
        let mut out = DMatrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        Self(out)
    }

    /// `⟨ket| self |ket⟩`.
    pub fn expectation(&self, ket: &[C64]) -> C64 {
        let n = self.rows();
        let mut acc = ZERO;
        for i in 0..n {
            let mut row = ZERO;
            for j in 0..n {
                row += self.0[(i, j)] * ket[j];
            }
            acc += ket[i].conj() * row;
        }
        acc
    }

    /// `max |U†U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let prod = self.adjoint().0 * &self.0;
        prod.max_abs_diff_identity()
    }
}

trait IdentityDiff {
    fn max_abs_diff_identity(&self) -> f64;
}

impl IdentityDiff for DMatrix<C64> {
    fn max_abs_diff_identity(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((self[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        err
    }
}

impl From<DMatrix<C64>> for ComplexMatrix {
    fn from(m: DMatrix<C64>) -> Self {
        Self(m)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_roundtrip_and_length_check() {
        let entries: Vec<C64> = (0..6).map(|k| C64::new(k as f64, -(k as f64))).collect();
        let m = ComplexMatrix::from_row_major(2, 3, entries.clone()).unwrap();
        assert_eq!(m.get(1, 0), entries[3]);
        assert_eq!(m.to_row_major(), entries);
        assert!(ComplexMatrix::from_row_major(2, 2, entries).is_err());
    }

    #[test]
    fn eigh_is_sorted_and_reconstructs() {
        let m = ComplexMatrix::from_row_major(
            2,
            2,
            vec![
                C64::new(2.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, -1.0),
                C64::new(1.0, 0.0),
            ],
        )
        .unwrap();
        let eig = m.eigh();
        assert!(eig.values[0] <= eig.values[1]);
        let back = ComplexMatrix::from_spectrum(&eig, |v| v);
        assert!(back.max_abs_diff(&m) < 1e-13);
        assert!(eig.vectors.unitarity_error() < 1e-13);
    }
}
