//! Fundamental solutions of the heat and Schrödinger equations on the
//! half-line `x > 0` with potential `k x^-2 + omega^2 x^2`, plus the
//! numerical machinery that checks them: Lie symmetry fields, reduced
//! ODEs, half-line quadrature and independent spectral / Crank–Nicolson
//! oracles.

// NaN-rejecting guards are written as negated comparisons on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod kernels;
pub mod oracle;
pub mod quadrature;
pub mod sampling;
pub mod specfun;
pub mod symmetry;
pub mod verify;

pub use error::{Error, Result};
