//! Numerical library for periodic and eventually periodic Jacobi operators
//! on finite gap sets: discriminants and band structure, scalar and block
//! orthogonal polynomials, Borel transforms on both sheets of the associated
//! two-sheeted surface, and verifiers for the determinant and continuation
//! identities that tie the scalar and block pictures together.

pub mod blockops;
pub mod error;
pub mod jacobi;
pub mod mfunction;
pub mod periodic;
pub mod polycore;
pub mod surface;

pub use error::{Error, Result};
