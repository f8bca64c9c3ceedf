//! Radial Fourier multipliers on `R^d`: modified Hankel transforms, Lorentz
//! quasi-norms, multiplier and maximal operators, kernel majorants and
//! numerical probes of their norm equivalences.

pub mod cli;
pub mod decomposition;
pub mod error;
pub mod grid;
pub mod hankel;
pub mod lorentz;
pub mod multipliers;
pub mod operators;
pub mod probe;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
