use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A user-supplied parameter violates a hypothesis of the model.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// A time outside the interval on which the background is defined.
    #[error("time {t} outside the domain: {reason}")]
    Domain { t: f64, reason: String },

    /// (1+sigma)H < 0 with sigma < 0: the curved mass diverges to -infinity.
    #[error("excluded region (1+sigma)H<0, sigma<0 (H = {hubble}, sigma = {sigma})")]
    ExcludedRegion { hubble: f64, sigma: f64 },

    #[error("q is not known to be monotone for these parameters")]
    NotMonotone,

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The lower envelope is evaluated at or beyond its pole.
    #[error("envelope pole reached at t = {pole}")]
    Pole { pole: f64 },

    #[error("radial domain too small: R_max = {r_max} but the cone reaches {cone}")]
    DomainTooSmall { r_max: f64, cone: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    pub(crate) fn domain(t: f64, reason: impl Into<String>) -> Self {
        Error::Domain {
            t,
            reason: reason.into(),
        }
    }
}
