//! Random butterfly matrices, Gaussian elimination under four pivoting
//! schemes, growth-factor analysis and butterfly Hadamard matrices.

pub mod analysis;
pub mod butterfly;
pub mod elimination;
pub mod error;
pub mod hadamard;
pub mod matrix;
pub mod perm;
pub mod rng;
pub mod stats;

pub use butterfly::{AngleVector, ButterflyKind};
pub use elimination::{GeFactorization, PivotScheme, PivotStrategy};
pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use perm::Permutation;
