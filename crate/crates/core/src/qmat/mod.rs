//! Dense Hermitian linear algebra and the distance measures built on it.

mod matrix;
mod metrics;
mod state;

pub use matrix::{ComplexMatrix, HermitianEigen, C64};
pub(crate) use matrix::ZERO;
pub use metrics::{
    dmax, dmax_positive_definite, partial_trace, partial_trace_matrix, psd_sqrt,
    psd_sqrt_matrix, purified_distance, tensor_product, tensor_product_capped,
    uhlmann_fidelity, SupportTolerance, DEFAULT_DIM_CAP, SQRT_CLAMP,
};
pub use state::{DensityMatrix, Split, Subsystem, HERMITIAN_TOL, PSD_TOL, TRACE_TOL};
