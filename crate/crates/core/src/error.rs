use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid rational literal `{0}`")]
    ParseRational(String),

    #[error("ray {index} is not a nonzero primitive integer vector")]
    NonPrimitiveRay { index: usize },

    #[error("invalid fan: {0}")]
    InvalidFan(String),

    #[error("divisors live on different fans")]
    FanMismatch,

    #[error("fans have different supports")]
    SupportMismatch,

    #[error("cone {cone} is not simplicial and full-dimensional")]
    NotSimplicial { cone: usize },

    #[error("fan is not complete")]
    NotComplete,

    #[error("point lies outside the support of the fan")]
    OutsideSupport,

    #[error("oracle `{name}` is not conical: relative defect {defect:e} at scale {scale}")]
    OracleNotHomogeneous { name: String, scale: f64, defect: f64 },

    #[error("linear map sends cone {cone} outside every cone of the target fan")]
    ConeIncompatible { cone: usize },

    #[error("arc support {0:?} is not a face of the fan")]
    ArcConeNotInFan(Vec<usize>),

    #[error("point lies outside the reduction locus of the ideal")]
    OutsideReduction,

    #[error("divisor is not nef: cone {cone} violates ray {ray}")]
    NotNef { cone: usize, ray: usize },

    #[error("boundary divisor needs strictly positive coefficients (ray {ray})")]
    NonPositiveBoundary { ray: usize },

    #[error("tolerance unreachable: best certified bound {achieved} exceeds {required}")]
    ToleranceUnreachable { required: String, achieved: String },

    #[error("approximation did not converge by depth {depth} (last estimate {estimate:e})")]
    NoConvergence { depth: usize, estimate: f64 },

    #[error("polytope is unbounded")]
    Unbounded,

    #[error("dimension {0} is above the supported range")]
    UnsupportedDimension(usize),

    #[error("denominator vanishes at the evaluation point")]
    ZeroDenominator,

    #[error("boundary function times the boundary divisor is not piecewise linear on its fan")]
    NotPiecewiseLinear,

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("no samples with min(-log|z|) >= {0}")]
    EmptyBucket(f64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
