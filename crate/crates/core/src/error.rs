use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (pivot {pivot:e} below threshold {threshold:e})")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("matrix is not Hermitian (max |A - A^H| = {0:e})")]
    NotHermitian(f64),

    #[error("rank-one update is degenerate (|1 + v^H A^-1 u| = {0:e})")]
    DegenerateUpdate(f64),

    #[error("channel matrix is rank deficient")]
    RankDeficient,

    #[error("beamformer has {rows} rows, expected {expected}")]
    BlockMismatch { rows: usize, expected: usize },

    #[error("transmit budget {0} W is not positive")]
    InfeasibleBudget(f64),

    #[error("power allocation did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("stationarity equation has no real root")]
    NoRealRoot,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("output error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
