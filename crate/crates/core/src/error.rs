use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("invalid lattice: side length must be at least 1 and dimension at least 1 (got d={d}, n={n})")]
    InvalidLattice { d: usize, n: usize },
    #[error("lattice {n}^{d} does not fit in memory addressing")]
    LatticeTooLarge { d: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("cannot parse region `{input}`: {reason}")]
    RegionSyntax { input: String, reason: String },
    #[error("unsupported region combination: {0}")]
    UnsupportedCombination(String),
    #[error("invalid truncation band: alpha={alpha} > beta={beta}")]
    InvalidBand { alpha: f64, beta: f64 },
    #[error("invalid truncation piece: {0}")]
    InvalidPiece(String),
    #[error("counter-example parameters overflow: {0}")]
    ParameterOverflow(String),
    #[error("class has {count} members, above the enumeration cap {cap}")]
    CombinatorialExplosion { count: f64, cap: usize },
    #[error("no positive norming constant exists: {0}")]
    NoNormingConstant(String),
    #[error("statistic undefined: {0}")]
    Undefined(String),
    #[error("resource cap exceeded: n^d * R = {work} > {cap}")]
    ResourceCap { work: u128, cap: u128 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
