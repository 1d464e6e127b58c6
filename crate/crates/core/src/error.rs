use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Each variant maps to a stable
/// machine-readable code via [`Error::code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular to working precision (sigma_min/sigma_max = {ratio:e})")]
    SingularMatrix { ratio: f64 },

    #[error("partition out of bounds: M={m}, n={n}, p={p} (need 1 <= n and n + p <= M - 1)")]
    PartitionBounds { m: usize, n: usize, p: usize },

    #[error("matrix is not banded with bandwidth {bandwidth}: entry ({row}, {col}) = {value:e}")]
    BandwidthViolation {
        bandwidth: usize,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("rank {rank} exceeds the smaller dimension {max} of the matrix")]
    InvalidRank { rank: usize, max: usize },

    #[error("lemma precondition violated: {0}")]
    LemmaPrecondition(String),

    #[error("supremum is unbounded to first order: {0}")]
    UnboundedRatio(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate integration domain: {0}")]
    DegenerateDomain(String),

    #[error("perturbed operator not guaranteed invertible: {0}")]
    Invertibility(String),

    #[error("instance generation failed after {attempts} attempts")]
    GenerationFailure { attempts: usize },

    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed Matrix Market input (line {line}): {msg}")]
    MatrixMarket { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::SingularMatrix { .. } => "singular-matrix",
            Error::PartitionBounds { .. } => "partition-bounds",
            Error::BandwidthViolation { .. } => "bandwidth-violation",
            Error::InvalidRank { .. } => "invalid-rank",
            Error::LemmaPrecondition(_) => "lemma-precondition",
            Error::UnboundedRatio(_) => "unbounded-ratio",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DegenerateDomain(_) => "degenerate-domain",
            Error::Invertibility(_) => "invertibility",
            Error::GenerationFailure { .. } => "generation-failure",
            Error::InvalidConfig(_) => "invalid-config",
            Error::MatrixMarket { .. } => "malformed-matrix-market",
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => "file-not-found",
            Error::Io(_) => "io",
        }
    }
}
