use thiserror::Error;

/// Failure modes of the estimation pipeline.
///
/// The variant name is part of the command-line contract: the front-end
/// prints it on standard error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("RankDeficient: {0}")]
    RankDeficient(String),
    #[error("NotPositiveDefinite: {0}")]
    NotPositiveDefinite(String),
    #[error("NotPSD: {0}")]
    NotPsd(String),
    #[error("NotHermitian: {0}")]
    NotHermitian(String),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("InvalidBasis: {0}")]
    InvalidBasis(String),
    #[error("InvalidSignal: {0}")]
    InvalidSignal(String),
    #[error("InvalidPsd: {0}")]
    InvalidPsd(String),
    #[error("GridTooCoarse: {0}")]
    GridTooCoarse(String),
    #[error("GridMismatch: {0}")]
    GridMismatch(String),
    #[error("SpectralZero: {0}")]
    SpectralZero(String),
    #[error("EmbeddingFailed: {0}")]
    EmbeddingFailed(String),
    #[error("PerturbationTooLarge: {0}")]
    PerturbationTooLarge(String),
    #[error("InsufficientLags: {0}")]
    InsufficientLags(String),
}

impl Error {
    /// Stable identifier of the variant, e.g. `"RankDeficient"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::RankDeficient(_) => "RankDeficient",
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
            Error::NotPsd(_) => "NotPSD",
            Error::NotHermitian(_) => "NotHermitian",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidBasis(_) => "InvalidBasis",
            Error::InvalidSignal(_) => "InvalidSignal",
            Error::InvalidPsd(_) => "InvalidPsd",
            Error::GridTooCoarse(_) => "GridTooCoarse",
            Error::GridMismatch(_) => "GridMismatch",
            Error::SpectralZero(_) => "SpectralZero",
            Error::EmbeddingFailed(_) => "EmbeddingFailed",
            Error::PerturbationTooLarge(_) => "PerturbationTooLarge",
            Error::InsufficientLags(_) => "InsufficientLags",
        }
    }

    /// True for failures caused by malformed inputs rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_) | Error::InvalidBasis(_) | Error::InvalidSignal(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
