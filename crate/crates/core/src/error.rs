use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A physical parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// The assembled stiffness matrix is not positive definite.
    #[error("stiffness matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("undamped resonance: dynamic stiffness is singular at {frequency_hz} Hz")]
    UndampedResonance { frequency_hz: f64 },

    #[error("time step {dt} s exceeds the stability bound {max_dt} s (20 steps per period of the {f2} Hz mode)")]
    TimeStepTooLarge { dt: f64, max_dt: f64, f2: f64 },

    #[error("sample count {0} is not addressable")]
    TooManySamples(f64),

    #[error("non-finite state at step {step} (t = {time} s): {state:?}")]
    NonFiniteState { step: usize, time: f64, state: [f64; 4] },

    #[error("analysis window too short: {cycles:.1} cycles available, at least {required} required")]
    WindowTooShort { cycles: f64, required: f64 },

    #[error("series of {len} samples is too short for a segment of {segment} samples")]
    SeriesTooShort { len: usize, segment: usize },

    #[error("band [{low}, {high}] Hz lies outside the spectrum grid [0, {max}] Hz")]
    BandOutOfRange { low: f64, high: f64, max: f64 },

    #[error("no carrier signal: output voltage is zero")]
    NoCarrier,

    #[error("transduction factor is missing: supply `eta` or the electrode geometry")]
    MissingTransduction,

    #[error("invalid config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by user input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::NotPositiveDefinite(_)
                | Error::TimeStepTooLarge { .. }
                | Error::MissingTransduction
                | Error::Config { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be finite, got {v}")))
    }
}

pub(crate) fn ensure_positive(name: &str, v: f64) -> Result<f64> {
    ensure_finite(name, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be > 0, got {v}")))
    }
}

pub(crate) fn ensure_non_negative(name: &str, v: f64) -> Result<f64> {
    ensure_finite(name, v)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be >= 0, got {v}")))
    }
}
