use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64};
use crate::error::{domain, shape, Error, Result};

/// Hermiticity tolerance applied on ingestion, before symmetrisation.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Allowed deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted in a state.
pub const PSD_TOL: f64 = 1e-10;

/// Bipartite dimension split `a × b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Split {
    pub a: usize,
    pub b: usize,
}

impl Split {
    pub fn new(a: usize, b: usize) -> Self {
        Self { a, b }
    }

    pub fn square(d: usize) -> Self {
        Self { a: d, b: d }
    }

    pub fn dim(&self) -> usize {
        self.a * self.b
    }

    /// Local dimension if the split is `d × d`.
    pub fn square_dim(&self) -> Option<usize> {
        (self.a == self.b).then_some(self.a)
    }
}

/// Which factor of a bipartite split to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Trace-one positive semidefinite matrix with an optional bipartite split.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    split: Option<Split>,
}

impl DensityMatrix {
    /// Validates and symmetrises `matrix`.
    pub fn new(matrix: ComplexMatrix, split: Option<Split>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(shape(format!(
                "density matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        check_split(matrix.rows(), split)?;
        let herm = matrix.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "hermiticity error {herm:e} exceeds {HERMITIAN_TOL:e}"
            )));
        }
        let matrix = matrix.hermitian_part();
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not one")));
        }
        let min = matrix.eigvalsh()[0];
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { matrix, split })
    }

    /// Skips validation; callers guarantee the invariants (convex mixtures,
    /// tensor products and partial traces of valid states).
    pub(crate) fn from_trusted(matrix: ComplexMatrix, split: Option<Split>) -> Self {
        debug_assert!(matrix.is_square());
        Self { matrix, split }
    }

    /// `|ψ⟩⟨ψ|` for a normalised ket.
    pub fn from_ket(ket: &[C64], split: Option<Split>) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("ket norm² {norm} is not one")));
        }
        check_split(ket.len(), split)?;
        Ok(Self {
            matrix: ComplexMatrix::outer(ket),
            split,
        })
    }

    pub fn maximally_mixed(dim: usize, split: Option<Split>) -> Result<Self> {
        if dim == 0 {
            return Err(domain("dimension must be positive"));
        }
        check_split(dim, split)?;
        Ok(Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
            split,
        })
    }

    /// Real diagonal state.
    pub fn diagonal(probs: &[f64], split: Option<Split>) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(probs), split)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn split(&self) -> Option<Split> {
        self.split
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn with_split(mut self, a: usize, b: usize) -> Result<Self> {
        let split = Split::new(a, b);
        check_split(self.dim(), Some(split))?;
        self.split = Some(split);
        Ok(self)
    }

    /// `w·self + (1−w)·other`, keeping the split of `self`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(domain(format!("mixing weight {w} outside [0, 1]")));
        }
        if self.dim() != other.dim() {
            return Err(shape(format!(
                "cannot mix states of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let m = &self.matrix.scale(w) + &other.matrix.scale(1.0 - w);
        Ok(Self::from_trusted(m, self.split))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.eigvalsh()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, ket: &[C64]) -> f64 {
        self.matrix.expectation(ket).re
    }
}

fn check_split(dim: usize, split: Option<Split>) -> Result<()> {
    match split {
        Some(s) if s.dim() != dim => Err(shape(format!(
            "split {}x{} does not match dimension {dim}",
            s.a, s.b
        ))),
        _ => Ok(()),
    }
}
