//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("custom coupling matrix is not symmetric (max asymmetry {max_asym:.3e}, tolerance {tol:.3e})")]
    AsymmetricCustomMatrix { max_asym: f64, tol: f64 },

    #[error("edge ({i}, {j}) out of range for a graph with {n} nodes")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("input matrix is not symmetric (max asymmetry {max_asym:.3e}, tolerance {tol:.3e})")]
    AsymmetricInput { max_asym: f64, tol: f64 },

    #[error("spectral radius {rho:.6} of M violates the bound 1/gamma = {limit:.6} required by the inverse cost coupling")]
    SpectralRadiusViolation { rho: f64, limit: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value encountered during integration at t = {t}")]
    NonFiniteBlowup { t: f64 },

    #[error("integration step too large: {0}")]
    StepTooLarge(String),

    #[error("not stabilizable: {0}")]
    NotStabilizable(String),

    #[error("iteration budget exhausted: {0}")]
    NoConvergence(String),

    #[error("control weight matrix is singular")]
    SingularR,

    #[error("decomposition and weights were built from different spectral data: {0}")]
    MismatchedSpectralData(String),

    #[error("model assumptions violated: {0}")]
    AssumptionViolation(String),

    #[error("time {t} outside the gain schedule range [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("information packet lacks required fields: {0}")]
    MissingInformation(String),

    #[error("simulation grid does not match the gain/transition grid: {0}")]
    GridMismatch(String),

    #[error("centralized problem too large: n*d_x = {size} exceeds the limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("gain schedule lacks stored Riccati samples (finite-horizon samples required)")]
    MissingRiccatiSamples,

    #[error("R is not positive definite")]
    NotPositiveDefiniteR,
}
