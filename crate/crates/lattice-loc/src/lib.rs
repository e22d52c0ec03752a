//! Exact localisation of lattice field functionals onto local polynomials.

pub mod cli;
pub mod error;
pub mod functionals;
pub mod lattice;
pub mod linalg;
pub mod loc;
pub mod monomials;
pub mod norms;
pub mod random;
pub mod scalar;
pub mod testfn;

pub use error::{Error, Result};
pub use scalar::Rational;
