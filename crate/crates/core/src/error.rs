use thiserror::Error;

pub type Result<T, E = HurstError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HurstError {
    #[error("expected {expected} samples (2^n + 1), got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("sample {index} is not finite")]
    NonFinite { index: usize },

    #[error("resolution {0} is out of range")]
    InvalidResolution(u32),

    #[error("requested level {requested} exceeds pyramid depth {depth}")]
    DepthExceeded { requested: u32, depth: u32 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("exponent p must be positive and finite, got {0}")]
    InvalidP(f64),

    #[error("level {level} exceeds series resolution {resolution}")]
    LevelExceedsResolution { level: u32, resolution: u32 },

    #[error("branch enumeration at level {level} exceeds the cap of {cap}")]
    ResourceLimit { level: u32, cap: u32 },

    #[error("branch moment vanishes")]
    ZeroMoment,

    #[error("path requires x(0) = x(1) = 0; request affine detrending")]
    NonZeroEndpoints,

    #[error("path is constant on the dyadic grid at level {level}{}", window_suffix(*.window))]
    DegeneratePath { level: u32, window: Option<usize> },

    #[error("level {n} is too shallow for window depth m = {m} (need n >= {min})")]
    WindowTooDeep { n: u32, m: usize, min: u32 },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("block exponent nu = {nu} exceeds level m = {m}")]
    InvalidNu { nu: u32, m: u32 },

    #[error("window [{start}, {start} + {len}) exceeds series length {available}")]
    OutOfBounds { start: usize, len: usize, available: usize },

    #[error("series of {len} samples is shorter than one window of {needed}")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("Hurst parameter must lie in (0, 1), got {0}")]
    InvalidH(f64),

    #[error("covariance embedding failed: {0}")]
    EmbeddingFailure(String),

    #[error("estimator kind {0} is not supported here")]
    UnsupportedKind(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn window_suffix(window: Option<usize>) -> String {
    match window {
        Some(w) => format!(" (window at offset {w})"),
        None => String::new(),
    }
}

impl HurstError {
    /// True for failures caused by the data being numerically degenerate,
    /// as opposed to malformed input or configuration.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            HurstError::DegeneratePath { .. }
                | HurstError::DegenerateDesign(_)
                | HurstError::ZeroMoment
                | HurstError::EmbeddingFailure(_)
        )
    }
}
