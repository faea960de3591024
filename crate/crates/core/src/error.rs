use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("belief at depth {depth} is outside the policy horizon {horizon}")]
    OutOfHorizon { depth: u64, horizon: u32 },

    #[error("belief prior ({alpha}, {beta}) does not match the policy table prior")]
    PriorMismatch { alpha: f64, beta: f64 },

    #[error("horizon cap {cap} leaves truncation error {bound:e} above tolerance {tolerance:e}")]
    HorizonCapExceeded { cap: u32, bound: f64, tolerance: f64 },

    #[error("retirement region on diagonal {depth} is not a prefix in k")]
    NonMonotoneBoundary { depth: u32 },

    #[error("brute-force horizon {horizon} exceeds the enumeration limit {limit}")]
    HorizonTooLarge { horizon: u32, limit: u32 },

    #[error("quadrature failed to reach tolerance {tolerance:e} (estimate {estimate:e})")]
    QuadratureDiverged { tolerance: f64, estimate: f64 },

    #[error("quadrature {quadrature} and closed form {closed_form} disagree beyond {allowed:e}")]
    QuadratureMismatch { quadrature: f64, closed_form: f64, allowed: f64 },

    #[error("observation phase of {tau} rounds exceeds the enumeration cap {cap}")]
    EnumerationCap { tau: u64, cap: u64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("cell (d = {d}, c = {c}): {source}")]
    Cell {
        d: f64,
        c: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("policy cache: {0}")]
    Cache(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
