//! Error type shared by every module.

use num_complex::Complex64;
use thiserror::Error;

/// Failures reported by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error(
        "resolvent is numerically singular at λ = {lambda} (relative residual {residual:.3e})"
    )]
    SingularResolvent { lambda: Complex64, residual: f64 },

    #[error("power iteration did not converge after {iterations} iterations")]
    NonConvergedPowerIteration { iterations: usize },

    #[error(
        "QR iteration did not converge ({iterations} iterations, {remaining} eigenvalues left)"
    )]
    QrNonconvergence { iterations: usize, remaining: usize },

    #[error("disc {n} holds {count} eigenvalues, expected exactly one")]
    DiscAssignmentConflict { n: usize, count: usize },

    #[error("contour passes through the spectrum near λ = {node}")]
    ContourThroughSpectrum { node: Complex64 },

    #[error("projector trace {trace} is not close to an integer")]
    NonIntegerTrace { trace: Complex64 },

    #[error("disc {n} count is {count:?}, expected 1")]
    CountMismatch { n: usize, count: Option<i64> },

    #[error("method unavailable: {0}")]
    MethodUnavailable(&'static str),

    #[error("gap γ_{n} = {gap:.3e} is too small for the consistency check")]
    GapTooSmall { n: usize, gap: f64 },

    #[error("root {index} has modulus {modulus}, outside (0, 1)")]
    RootOutOfDisc { index: usize, modulus: f64 },

    #[error("band {band} leaves a geometric tail of {tail:.3e}")]
    BandTooSmall { band: usize, tail: f64 },

    #[error("grid of {grid} points is too small: edge coefficient {edge:.3e}")]
    GridTooSmall { grid: usize, edge: f64 },

    #[error("phase of f_{n} is undefined: |⟨f_n|e^(ix) f_(n-1)⟩| = {magnitude:.3e}")]
    PhaseDegenerate { n: usize, magnitude: f64 },

    #[error("{estimate}: value {value:.6e} exceeds bound {bound:.6e} at λ = {lambda:?}")]
    BoundViolated {
        estimate: String,
        lambda: Option<Complex64>,
        value: f64,
        bound: f64,
    },

    #[error("smallness gate failed: Σ|γ_k| = {sum:.6e} > 1/5")]
    GateFailed { sum: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
