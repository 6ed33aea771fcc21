//! Error type shared by all numerical kernels.

use thiserror::Error;

/// Errors produced by the numerical kernels.
///
/// Every fallible operation in this crate returns one of these variants so
/// that callers (and the CLI exit-code mapping) can distinguish usage errors
/// from genuine numerical failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("spectrum is degenerate (min gap {mingap:.3e} below threshold {threshold:.3e})")]
    DegenerateSpectrum { mingap: f64, threshold: f64 },
    #[error("multivariate gamma pole: argument {arg} invalid for dimension {dim}")]
    GammaPole { dim: usize, arg: f64 },
    #[error("bad dimensions: {0}")]
    BadDims(String),
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("hypergeometric series diverges (p = {p}, q = {q}, |x| = {x:.3e})")]
    SeriesDivergence { p: usize, q: usize, x: f64 },
    #[error("lower hypergeometric parameter {0} is a non-positive integer")]
    LowerParamPole(f64),
    #[error("quadrature failed to converge after {evals} evaluations (err est {err:.3e})")]
    NonConvergent { evals: usize, err: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigenvalue {0} outside the supported range {1}")]
    EigOutOfRange(f64, &'static str),
    #[error("eigenvalue {0} must be strictly positive")]
    NonPositiveEig(f64),
    #[error("unsupported regime: {0}")]
    BadRegime(String),
    #[error("unsupported case: {0}")]
    UnsupportedCase(String),
    #[error("LMS sampling requires integer alpha (got {0})")]
    NonIntegerAlpha(f64),
    #[error("importance weights degenerate (effective sample size {ess:.1} of {n})")]
    DegenerateWeights { ess: f64, n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
