use thiserror::Error;

/// Every failure mode of the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {re}{im:+}i lies on a Gamma pole")]
    Pole { re: f64, im: f64 },

    #[error("degenerate mode specification: {0}")]
    DegenerateSpec(String),

    #[error("contour passes through (or too close to) a root or pole; perturb the box: {0}")]
    ContourThroughRoot(String),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("input under-resolved: {fraction:.3e} of the spectral energy sits in the top frequency decade")]
    AliasWarning { fraction: f64 },

    #[error("resonance: {0}")]
    Resonance(String),

    #[error("right-hand side decay contradicts the declared profile: {0}")]
    TailMismatch(String),

    #[error("window too short: half-length {half_length} < required {required}")]
    WindowTooShort { half_length: f64, required: f64 },

    #[error("candidate is not annihilated by the mode operator (relative fit residual {0:.3e})")]
    NotAnnihilated(f64),

    #[error("singular boundary value problem failed: {0}")]
    SingularBvp(String),

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("neck configuration overlap: {0}")]
    ConfigOverlap(String),

    #[error("conformal factor is not positive (min {min:.3e})")]
    NonPositiveConformalFactor { min: f64 },

    #[error("iteration diverged: {0}")]
    Diverged(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of the numerical pipeline (as opposed to bad configuration).
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::Parse { .. } | Error::Validation { .. } | Error::InvalidInput(_)
        )
    }
}
