use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Unknown configuration key.
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    /// A configuration invariant does not hold.
    #[error("configuration invariant violated: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A scalar argument that must be strictly positive was not.
    #[error("non-positive argument `{name}` = {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("matrix is not Hermitian (relative residual {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("rank deficient matrix: {0}")]
    RankDeficient(String),

    /// The protective MRT direction vanished after projection.
    #[error("degenerate precoding direction: {0}")]
    DegenerateDirection(String),

    /// The heuristic scattering design received an all-zero synthesis matrix.
    #[error("degenerate synthesis matrix for AP {0}")]
    DegenerateSynthesis(usize),

    #[error("insufficient Monte Carlo trials: {got} < {min}")]
    InsufficientTrials { got: usize, min: usize },

    #[error("invalid sweep: {0}")]
    Sweep(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownKey(_) => "unknown_key",
            Error::Config(_) => "config",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NonPositive { .. } => "non_positive",
            Error::NotHermitian(_) => "not_hermitian",
            Error::NonSquare { .. } => "non_square",
            Error::RankDeficient(_) => "rank_deficient",
            Error::DegenerateDirection(_) => "degenerate_direction",
            Error::DegenerateSynthesis(_) => "degenerate_synthesis",
            Error::InsufficientTrials { .. } => "insufficient_trials",
            Error::Sweep(_) => "sweep",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
