use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime below 2^31")]
    NonPrime(u64),
    #[error("operands belong to different rings")]
    MixedRings,
    #[error("operands belong to different spaces")]
    MixedSpaces,
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ball cannot be split")]
    NotSplittable,
    #[error("operation not supported: {0}")]
    NotSupported(String),
    #[error("sequence indices start at 1")]
    IndexZero,
    #[error("invalid phi: {0}")]
    InvalidPhi(String),
    #[error("families are not separable: {0}")]
    NotSeparable(String),
    #[error("point family is not compactly supported")]
    NotCompactlySupported,
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("not representable: {0}")]
    NotRepresentable(String),
    #[error("{0} is not invertible in the ring")]
    NotInvertible(String),
    #[error("step function pieces overlap")]
    OverlappingPieces,
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPrime(_) => "non_prime",
            Error::MixedRings => "mixed_rings",
            Error::MixedSpaces => "mixed_spaces",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotSplittable => "not_splittable",
            Error::NotSupported(_) => "not_supported",
            Error::IndexZero => "index_zero",
            Error::InvalidPhi(_) => "invalid_phi",
            Error::NotSeparable(_) => "not_separable",
            Error::NotCompactlySupported => "not_compactly_supported",
            Error::MalformedCertificate(_) => "malformed_certificate",
            Error::PreconditionViolated(_) => "precondition_violated",
            Error::NotRepresentable(_) => "not_representable",
            Error::NotInvertible(_) => "not_invertible",
            Error::OverlappingPieces => "overlapping_pieces",
            Error::Parse(_) => "parse",
        }
    }
}
