use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no guided slab mode found in the effective-index bracket")]
    NoGuidedMode,

    #[error("holes {first} and {second} overlap")]
    OverlappingHoles { first: usize, second: usize },

    #[error("plane-wave basis has {size} vectors, above the cap of {cap}")]
    BasisTooLarge { size: usize, cap: usize },

    #[error("plane-wave basis has {size} vector(s); at least two are required")]
    BasisTooSmall { size: usize },

    #[error("permittivity matrix is numerically singular (condition number {condition:.3e})")]
    SingularEpsilon { condition: f64 },

    #[error("dense eigensolver failed: {0}")]
    EigSolveFailure(String),

    #[error(
        "no TE band gap: lower band maximum {omega_lo:.6} >= upper band minimum {omega_hi:.6}"
    )]
    NoGap { omega_lo: f64, omega_hi: f64 },

    #[error("band tracking ambiguous at k index {k_index} (best overlap {overlap:.3})")]
    TrackingAmbiguity { k_index: usize, overlap: f64 },

    #[error("geometry is not mirror-symmetric about y = 0")]
    AsymmetricGeometry,

    #[error("no guided band crosses normalized frequency {omega:.6}")]
    NoneFound { omega: f64 },

    #[error("mode field has zero norm")]
    ZeroField,

    #[error("effective-area mask is empty")]
    EmptyMask,

    #[error("grids of the supplied maps do not match")]
    GridMismatch,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::NoGuidedMode => "NoGuidedMode",
            Error::OverlappingHoles { .. } => "OverlappingHoles",
            Error::BasisTooLarge { .. } => "BasisTooLarge",
            Error::BasisTooSmall { .. } => "BasisTooSmall",
            Error::SingularEpsilon { .. } => "SingularEpsilon",
            Error::EigSolveFailure(_) => "EigSolveFailure",
            Error::NoGap { .. } => "NoGap",
            Error::TrackingAmbiguity { .. } => "TrackingAmbiguity",
            Error::AsymmetricGeometry => "AsymmetricGeometry",
            Error::NoneFound { .. } => "NoneFound",
            Error::ZeroField => "ZeroField",
            Error::EmptyMask => "EmptyMask",
            Error::GridMismatch => "GridMismatch",
        }
    }
}
