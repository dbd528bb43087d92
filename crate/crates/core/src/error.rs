use thiserror::Error;

/// Errors surfaced by the numerical and sampling routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An intermediate quantity left the representable range.
    #[error("range error in {context}: {detail}")]
    Range { context: &'static str, detail: String },

    /// Argument on the branch cut of an analytically continued function.
    #[error("argument {z} lies on the branch cut [1, inf)")]
    BranchCut { z: num_complex::Complex64 },

    /// A series failed to converge within the allowed number of terms.
    #[error("series for {context} did not converge within {max_terms} terms")]
    Truncation { context: &'static str, max_terms: usize },

    /// Adaptive quadrature failed to meet its tolerance.
    #[error("quadrature failure in {context}: {panels} panels, residual {residual:.3e}")]
    Quadrature {
        context: &'static str,
        panels: usize,
        residual: f64,
    },

    /// The Gil-Pelaez tail did not decay before the frequency cap.
    #[error("CF inversion: |phi| = {cf_modulus:.3e} at omega_max = {omega_max:.3e}")]
    Inversion { omega_max: f64, cf_modulus: f64 },

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A statistical estimator was asked for with too few samples.
    #[error("insufficient samples: {got} (need at least {need})")]
    InsufficientSamples { got: usize, need: usize },

    /// Invalid parameter set.
    #[error("invalid parameter: {0}")]
    Param(String),
}

pub type Result<T> = std::result::Result<T, Error>;
