//! Smooth families of complex Hadamard matrices through the Fourier matrix.
//!
//! The crate computes, order by order, which first-order deformations of `F_N`
//! extend to higher order, and builds the known affine families explicitly.

pub mod defect;
pub mod error;
pub mod expansion;
pub mod families;
pub mod genpert;
pub mod hcore;
pub mod n12;
pub mod numtheory;

pub use error::{Error, Result};
pub use hcore::ComplexMatrix;
