//! One-dimensional isentropic gas dynamics: an exact Riemann solver, a modified
//! staggered Godunov scheme with relative-energy corrections and invariant-region
//! cutoffs, decay diagnostics, and numerical certification of the supporting
//! inequalities.

pub mod diagnostics;
pub mod error;
pub mod gas;
pub mod numerics;
pub mod riemann;
pub mod scheme;
pub mod verify;

pub use error::{Error, Result};
pub use gas::{GasParams, GasState, InvariantPair};
