use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input is not symmetric (max |M - M^T| = {residual:e})")]
    AsymmetricInput { residual: f64 },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigen/singular value decomposition did not converge")]
    ConvergenceFailure,

    #[error("matrix is not positive semi-definite (smallest eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotSpd { min_eig: f64 },

    #[error("factor has rank {rank}, expected full column rank {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("factor does not reproduce the base point (residual {residual:e})")]
    FactorMismatch { residual: f64 },

    #[error("matrix is not tangent to the rank-{rank} stratum (normal block {residual:e})")]
    NotTangent { rank: usize, residual: f64 },

    #[error("rotation does not index a preimage of the exponential map")]
    NotPreimage,

    #[error("logarithm is not unique: rank(Sigma Lambda) = {r} < {k}")]
    NotUnique { r: usize, k: usize },

    #[error("points lie in different strata (ranks {k} and {l})")]
    RankMismatch { k: usize, l: usize },

    #[error("parameter has spectral norm {norm} > 1")]
    ParamOutOfBall { norm: f64 },

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("interior rank is not constant along the segment ({min}..={max})")]
    NonConstantRank { min: usize, max: usize },

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("{0}")]
    Parse(String),
}
