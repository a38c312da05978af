use thiserror::Error;

/// Errors for state, channel, and solver construction.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("not Hermitian (max |M - M†| entry = {0:.3e})")]
    NotHermitian(f64),

    #[error("not positive semi-definite (min eigenvalue = {0:.3e})")]
    NotPsd(f64),

    #[error("trace is {0}, expected 1 within 1e-10")]
    InvalidTrace(f64),

    #[error("vector norm is {0}, expected 1 within 1e-10")]
    NotNormalized(f64),

    #[error("subsystem dims {dims:?} do not factor dimension {dim}")]
    BadFactorization { dims: Vec<usize>, dim: usize },

    #[error("Kraus completeness violated: |ΣK†K - I| = {0:.3e}")]
    KrausIncomplete(f64),

    #[error("not an isometry: |V†V - I| = {0:.3e}")]
    NotIsometry(f64),

    #[error("basis is not orthonormal within 1e-9 (residual {0:.3e})")]
    BasisNotOrthonormal(f64),

    #[error("POVM invalid: {0}")]
    InvalidPovm(String),

    #[error("probability {0} outside [0,1]")]
    BadProbability(f64),

    #[error("distribution does not sum to 1 (sum = {0})")]
    BadDistribution(f64),

    #[error("stochastic matrix row {0} sums to {1}, expected 1 within 1e-12")]
    NotStochastic(usize, f64),

    #[error("enumeration bound exceeded: {0}")]
    EnumerationBound(String),

    #[error("typical set is empty for the given distribution, n, and delta")]
    TypicalSetEmpty,

    #[error("no sequence outside the typical set is available for the reserved outcome")]
    NoAtypicalSequence,

    #[error("reduced states differ beyond tolerance (fidelity deficit {0:.3e})")]
    PurificationMismatch(f64),

    #[error("environment dimension {0} is smaller than required {1}")]
    EnvironmentTooSmall(usize, usize),

    #[error("posterior map construction failed: {0}")]
    PosteriorConstruction(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
