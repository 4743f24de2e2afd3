//! Numerical engine for bound-state representations of the quantum affine
//! deformed Hubbard algebra: generators, coproducts, bulk S-matrices and
//! boundary reflection K-matrices, with verification routines for every
//! algebraic identity they are expected to satisfy.

pub mod bigfloat;
pub mod coalgebra;
pub mod error;
pub mod kinematics;
pub mod kmatrix;
pub mod matrix;
pub mod nullspace;
pub mod report;
pub mod representation;
pub mod scalar;
pub mod smatrix;

pub use error::{QabError, Result};
