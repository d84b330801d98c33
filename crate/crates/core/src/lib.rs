//! Linear minimization oracles over spectral and Ky Fan norm balls, the
//! optimizers built from them, fast top-k singular value engines and the
//! least-squares benchmark harness.

pub mod bench;
pub mod error;
pub mod geometry;
pub mod lmo;
pub mod lowrank;
pub mod matrix;
pub mod norms;
pub mod optimizer;
mod spec_text;

pub use error::{Error, Result};
pub use matrix::{Matrix, RngSeed, SvdFactors};
pub use norms::NormKind;
