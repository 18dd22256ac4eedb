use thiserror::Error;

/// Errors raised by kernel evaluation and the verification machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The Schrödinger kernel focuses at `t` (|sin(ω s)| below the guard band).
    #[error("caustic at t = {t}: |sin(omega*s)| = {sin_abs:e} is below the guard threshold")]
    Caustic { t: f64, sin_abs: f64 },

    #[error("finite-difference stencil leaves the admissible region: {0}")]
    Stencil(String),

    #[error("normalization limit did not converge: {0}")]
    NonConvergence(String),

    #[error("quadrature tolerance not met: value {value}, estimate {estimate:e}, requested {tol:e}")]
    ToleranceNotMet { value: f64, estimate: f64, tol: f64 },

    #[error("spectral tail bound {tail:e} exceeds tolerance {tol:e}")]
    TailTooLarge { tail: f64, tol: f64 },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("field is not in the admissible class: {0}")]
    Structure(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("size mismatch: {0}")]
    Size(String),
}

pub type Result<T> = std::result::Result<T, Error>;
