use nalgebra::Cholesky;

use super::matrix::{ComplexMatrix, ZERO};
use super::state::{DensityMatrix, Split, Subsystem};
use crate::error::{domain, shape, Error, Result};

/// Default cap on the total dimension of a tensor product.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Eigenvalues of a "PSD" input this far below zero are clamped to zero.
pub const SQRT_CLAMP: f64 = 1e-8;

/// Relative eigenvalue threshold below which `σ` is treated as singular in
/// [`dmax`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportTolerance {
    eigen_cutoff: f64,
}

impl SupportTolerance {
    pub const DEFAULT_CUTOFF: f64 = 1e-10;
    pub const MAX_CUTOFF: f64 = 1e-6;

    pub fn new(eigen_cutoff: f64) -> Result<Self> {
        if !(0.0..=Self::MAX_CUTOFF).contains(&eigen_cutoff) {
            return Err(domain(format!(
                "eigen cutoff {eigen_cutoff:e} outside [0, {:e}]",
                Self::MAX_CUTOFF
            )));
        }
        Ok(Self { eigen_cutoff })
    }

    pub fn eigen_cutoff(&self) -> f64 {
        self.eigen_cutoff
    }
}

impl Default for SupportTolerance {
    fn default() -> Self {
        Self {
            eigen_cutoff: Self::DEFAULT_CUTOFF,
        }
    }
}

pub fn tensor_product(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    tensor_product_capped(a, b, DEFAULT_DIM_CAP)
}

/// `a ⊗ b` with split `dim(a) × dim(b)`.
pub fn tensor_product_capped(
    a: &DensityMatrix,
    b: &DensityMatrix,
    cap: usize,
) -> Result<DensityMatrix> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(Error::CapacityExceeded { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(Error::CapacityExceeded { dim, cap });
    }
    Ok(DensityMatrix::from_trusted(
        a.matrix().kron(b.matrix()),
        Some(Split::new(a.dim(), b.dim())),
    ))
}

/// Partial trace of an arbitrary `(a·b) × (a·b)` matrix.
pub fn partial_trace_matrix(m: &ComplexMatrix, split: Split, keep: Subsystem) -> Result<ComplexMatrix> {
    if !m.is_square() || m.rows() != split.dim() {
        return Err(shape(format!(
            "split {}x{} does not match a {}x{} matrix",
            split.a,
            split.b,
            m.rows(),
            m.cols()
        )));
    }
    let (a, b) = (split.a, split.b);
    Ok(match keep {
        Subsystem::A => ComplexMatrix::from_fn(a, a, |i, j| {
            (0..b).fold(ZERO, |acc, k| acc + m.get(i * b + k, j * b + k))
        }),
        Subsystem::B => ComplexMatrix::from_fn(b, b, |i, j| {
            (0..a).fold(ZERO, |acc, k| acc + m.get(k * b + i, k * b + j))
        }),
    })
}

pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Result<DensityMatrix> {
    let split = rho
        .split()
        .ok_or_else(|| shape("partial trace needs a declared bipartite split"))?;
    let m = partial_trace_matrix(rho.matrix(), split, keep)?;
    Ok(DensityMatrix::from_trusted(m, None))
}

/// Principal square root of a Hermitian PSD matrix.
pub fn psd_sqrt_matrix(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = m.eigh();
    if let Some(&min) = eig.values.first() {
        if min < -SQRT_CLAMP {
            return Err(Error::NotPsd(min));
        }
    }
    Ok(ComplexMatrix::from_spectrum(&eig, |v| v.max(0.0).sqrt()))
}

pub fn psd_sqrt(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    psd_sqrt_matrix(rho.matrix())
}

fn same_dim(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(shape(format!(
            "states have dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// `‖√ρ √σ‖₁²`, clamped to `[0, 1]`.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let prod = &psd_sqrt(rho)? * &psd_sqrt(sigma)?;
    let nuclear: f64 = prod.singular_values().iter().sum();
    Ok((nuclear * nuclear).clamp(0.0, 1.0))
}

pub fn purified_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok((1.0 - uhlmann_fidelity(rho, sigma)?).max(0.0).sqrt())
}

/// Max-relative entropy `log2 λ_max(σ^{-1/2} ρ σ^{-1/2})`, with the inverse
/// taken on the support of `σ`.
pub fn dmax(rho: &DensityMatrix, sigma: &DensityMatrix, tol: SupportTolerance) -> Result<f64> {
    same_dim(rho, sigma)?;
    let eig = sigma.matrix().eigh();
    let lmax = *eig.values.last().expect("nonempty spectrum");
    let cut = tol.eigen_cutoff * lmax;
    let (support, null): (Vec<usize>, Vec<usize>) =
        (0..eig.values.len()).partition(|&k| eig.values[k] > cut);

    let column = |k: usize| -> Vec<_> {
        (0..eig.values.len())
            .map(|i| eig.vectors.get(i, k))
            .collect()
    };
    // Weight of ρ outside supp(σ). A floor well below any meaningful cutoff
    // absorbs rounding when the cutoff itself is zero.
    let residual: f64 = null
        .iter()
        .map(|&k| rho.matrix().expectation(&column(k)).re)
        .sum();
    if residual > tol.eigen_cutoff.max(1e-14) {
        return Err(Error::Support(residual));
    }

    let s = support.len();
    let cols: Vec<Vec<_>> = support.iter().map(|&k| column(k)).collect();
    let rho_v: Vec<Vec<_>> = cols
        .iter()
        .map(|v| {
            (0..rho.dim())
                .map(|i| (0..rho.dim()).fold(ZERO, |acc, j| acc + rho.matrix().get(i, j) * v[j]))
                .collect()
        })
        .collect();
    let scaled = ComplexMatrix::from_fn(s, s, |i, j| {
        let num = cols[i]
            .iter()
            .zip(&rho_v[j])
            .fold(ZERO, |acc, (a, b)| acc + a.conj() * b);
        num / (eig.values[support[i]] * eig.values[support[j]]).sqrt()
    });
    let top = *scaled.eigvalsh().last().expect("nonempty support");
    Ok(top.log2().max(0.0))
}

/// [`dmax`] for a strictly positive definite `σ`, via a Cholesky factor
/// `σ = L L†` and the spectrum of `L⁻¹ ρ L⁻†`. Falls back to the spectral
/// route when the factorisation fails.
pub fn dmax_positive_definite(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let Some(chol) = Cholesky::new(sigma.matrix().as_nalgebra().clone()) else {
        return dmax(rho, sigma, SupportTolerance::default());
    };
    let l = chol.l();
    let x = l
        .solve_lower_triangular(rho.matrix().as_nalgebra())
        .expect("triangular factor is nonsingular");
    let y = l
        .solve_lower_triangular(&x.adjoint())
        .expect("triangular factor is nonsingular");
    let top = *ComplexMatrix::from(y).eigvalsh().last().expect("nonempty spectrum");
    Ok(top.log2().max(0.0))
}
