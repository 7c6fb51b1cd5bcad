use thiserror::Error;

/// Errors raised by the deconvolution library.
///
/// Row and column positions are zero-based. Sample and source numbers
/// (`sample`, `source`) are one-based, matching the usual `a_kj` notation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative value at row {row}, column {col}")]
    NegativeValue { row: usize, col: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("duplicate gene id `{0}`")]
    DuplicateGeneId(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("mixing matrix is singular (det = {det:e})")]
    SingularMixing { det: f64 },

    #[error("negative mixing entry at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize },

    #[error("row {row} of proportion matrix sums to {sum}, expected 1")]
    RowSumViolation { row: usize, sum: f64 },

    #[error("column {0} has no signal to normalize")]
    AllZeroColumn(usize),

    #[error("only {retained} gene(s) left after filtering, need at least 2")]
    EmptyAfterFilter { retained: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("only {found} gene(s) with a finite ratio, need at least 2")]
    InsufficientRatios { found: usize },

    #[error("scatter sector is degenerate (width {width:e}); sources are indistinguishable")]
    DegenerateSector { width: f64 },

    #[error("source {source_id}: found {found} marker(s), require {required}")]
    TooFewMarkers {
        source_id: usize,
        found: usize,
        required: usize,
    },

    #[error("marker bands overlap at gene {0}; reduce epsilon")]
    OverlappingMarkers(usize),

    #[error("invalid marker sets: {0}")]
    InvalidMarkerSets(String),

    #[error("marker set for source {0} is empty")]
    EmptyMarkerSet(usize),

    #[error("marker gene {0} has zero norm")]
    ZeroNormMarker(usize),

    #[error("estimated radii do not bracket the data (column scales {c1}, {c2})")]
    NegativeScale { c1: f64, c2: f64 },

    #[error("proportion a[{sample}][{source_id}] is zero")]
    ZeroProportion { sample: usize, source_id: usize },

    #[error("input has zero variance")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("labels contain a single class")]
    SingleClass,
}

impl Error {
    /// Stable name of the variant, used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NegativeValue { .. } => "NegativeValue",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::DuplicateGeneId(_) => "DuplicateGeneId",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::SingularMixing { .. } => "SingularMixing",
            Error::NegativeEntry { .. } => "NegativeEntry",
            Error::RowSumViolation { .. } => "RowSumViolation",
            Error::AllZeroColumn(_) => "AllZeroColumn",
            Error::EmptyAfterFilter { .. } => "EmptyAfterFilter",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InsufficientRatios { .. } => "InsufficientRatios",
            Error::DegenerateSector { .. } => "DegenerateSector",
            Error::TooFewMarkers { .. } => "TooFewMarkers",
            Error::OverlappingMarkers(_) => "OverlappingMarkers",
            Error::InvalidMarkerSets(_) => "InvalidMarkerSets",
            Error::EmptyMarkerSet(_) => "EmptyMarkerSet",
            Error::ZeroNormMarker(_) => "ZeroNormMarker",
            Error::NegativeScale { .. } => "NegativeScale",
            Error::ZeroProportion { .. } => "ZeroProportion",
            Error::ZeroVariance => "ZeroVariance",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::SingleClass => "SingleClass",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
