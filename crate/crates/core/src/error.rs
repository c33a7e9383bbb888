use thiserror::Error;

use crate::ground::FinSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input where a non-empty set is required")]
    EmptyInput,
    #[error("duplicate element {0}")]
    DuplicateElement(usize),
    #[error("elements are not strictly increasing: {0:?}")]
    NotIncreasing(Vec<usize>),
    #[error("fraction {num}/{den} is not in lowest terms")]
    NotReduced { num: u64, den: u64 },
    #[error("fraction {num}/{den} lies outside [0,1]")]
    RationalOutOfRange { num: u64, den: u64 },
    #[error("subset size {k} exceeds ground size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("element {rank} lies outside a ground of size {n}")]
    OutsideGround { rank: usize, n: usize },

    #[error("scheme arity m={m}, d={d} is invalid (need m > d)")]
    InvalidArity { m: usize, d: usize },
    #[error("set {got} has the wrong cardinality (expected {expected})")]
    ArityMismatch { expected: usize, got: FinSet },
    #[error("sigma is undefined on {0}")]
    SigmaUndefined(FinSet),
    #[error("sigma({x}) = {image} is not a subset of its argument")]
    NotMonotone { x: FinSet, image: FinSet },
    #[error("cover failure: {a} is not contained in eta(sigma({a}))")]
    CoverFailure { a: FinSet },
    #[error("delta chain reached {bound}, beyond the ground of size {n}")]
    GroundExhausted { bound: usize, n: usize },
    #[error("sigma({x} + delta) omits delta = {delta}")]
    DeltaNotSelected { x: FinSet, delta: usize },
    #[error("no compressing subset of {0}")]
    NoCompressingSubset(FinSet),

    #[error("no decomposition chosen for ordinal {0}")]
    ChooserMissing(usize),
    #[error("chooser for ordinal {alpha} has level {level} and side {side}")]
    ChooserMismatch { alpha: usize, level: usize, side: usize },
    #[error("point {0:?} does not lie in exactly one part")]
    NotPartition(Vec<usize>),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("sample is empty")]
    EmptySample,
    #[error("enumeration of {needed} tuples exceeds the budget of {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("invalid rational {0:?}")]
    InvalidRational(String),

    #[error("coordinates {0:?} are not separated by more than the tolerance")]
    DegenerateGap(Vec<f64>),
    #[error("selector output {image:?} is not a sub-tuple of {x:?}")]
    NotSubtuple { x: Vec<f64>, image: Vec<f64> },
    #[error("dropped coordinate of {0:?} is ambiguous")]
    AmbiguousDrop(Vec<f64>),
    #[error("image at {point:?} drifted from {expected:?} to {got:?}")]
    ImageDrift {
        point: Vec<f64>,
        expected: Vec<f64>,
        got: Vec<f64>,
    },
    #[error("probe radius {radius} exceeds the epsilon gap {gap}")]
    RadiusTooLarge { radius: f64, gap: f64 },
    #[error("unknown selector {0:?}")]
    UnknownSelector(String),

    #[error("malformed document: {0}")]
    Format(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::DuplicateElement(_) => "DuplicateElement",
            Error::NotIncreasing(_) => "NotIncreasing",
            Error::NotReduced { .. } => "NotReduced",
            Error::RationalOutOfRange { .. } => "RationalOutOfRange",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::OutsideGround { .. } => "OutsideGround",
            Error::InvalidArity { .. } => "InvalidArity",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::SigmaUndefined(_) => "SigmaUndefined",
            Error::NotMonotone { .. } => "NotMonotone",
            Error::CoverFailure { .. } => "CoverFailure",
            Error::GroundExhausted { .. } => "GroundExhausted",
            Error::DeltaNotSelected { .. } => "DeltaNotSelected",
            Error::NoCompressingSubset(_) => "NoCompressingSubset",
            Error::ChooserMissing(_) => "ChooserMissing",
            Error::ChooserMismatch { .. } => "ChooserMismatch",
            Error::NotPartition(_) => "NotPartition",
            Error::InvalidDistribution(_) => "InvalidDistribution",
            Error::EmptySample => "EmptySample",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::InvalidRational(_) => "InvalidRational",
            Error::DegenerateGap(_) => "DegenerateGap",
            Error::NotSubtuple { .. } => "NotSubtuple",
            Error::AmbiguousDrop(_) => "AmbiguousDrop",
            Error::ImageDrift { .. } => "ImageDrift",
            Error::RadiusTooLarge { .. } => "RadiusTooLarge",
            Error::UnknownSelector(_) => "UnknownSelector",
            Error::Format(_) => "Format",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
