//! Catalytic quantum teleportation and single-shot entanglement distillation
//! with embezzling catalysts.
//!
//! The crate is organised bottom-up:
//!
//! - [`qmat`]: dense Hermitian linear algebra, Uhlmann fidelity, purified
//!   distance and max-relative entropy.
//! - [`qstates`]: maximally entangled states, Ginibre/Haar samplers, Schmidt
//!   decompositions and the shared matrix text format.
//! - [`teleport`]: the standard qudit teleportation channel and its average
//!   fidelity.
//! - [`catalysis_cs`]: convex-split catalysts, copy counts and the catalyst
//!   dimension minimiser.
//! - [`catalysis_emb`]: the van Dam–Hayden embezzling state, the rearrangement
//!   unitary, exact protocol output and catalyst consumption.
//! - [`duan`]: entropy-constrained lower bound for correlated catalysts and
//!   the qutrit region map.
//! - [`distill`]: single-shot distillation plans for both catalyst families.

pub mod catalysis_cs;
pub mod catalysis_emb;
pub mod distill;
pub mod duan;
mod error;
pub mod qmat;
pub mod qstates;
pub mod teleport;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Copy counts and Schmidt ranks above this value are reported as impractical
/// instead of being computed exactly.
pub const IMPRACTICAL_COUNT: u64 = 1 << 40;

/// True when `count` hit the [`IMPRACTICAL_COUNT`] cap.
pub fn is_impractical(count: u64) -> bool {
    count >= IMPRACTICAL_COUNT
}

/// Ceiling of a nonnegative real as a count, saturating at [`IMPRACTICAL_COUNT`].
pub(crate) fn ceil_count(x: f64) -> u64 {
    if !x.is_finite() || x >= IMPRACTICAL_COUNT as f64 {
        IMPRACTICAL_COUNT
    } else {
        (x.ceil() as u64).max(1)
    }
}
