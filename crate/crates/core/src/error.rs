use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument was NaN or infinite.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("headway {headway} m is not positive (collision)")]
    Collision { headway: f64 },

    #[error("collision at t = {time} s, vehicle {index}: headway {headway} m")]
    CollisionAt {
        time: f64,
        index: usize,
        headway: f64,
    },

    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),

    #[error("ambiguous equilibrium: {0}")]
    Ambiguous(String),

    /// The linearized trio violates alpha > 0, beta > gamma > 0.
    #[error(
        "model violates the common-sense condition: alpha={alpha}, beta={beta}, gamma={gamma}"
    )]
    CommonSense { alpha: f64, beta: f64, gamma: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid size: {0}")]
    Size(String),

    #[error("pole of the transfer product at index {index}")]
    Pole { index: usize },

    #[error("zero eigenvalue has multiplicity {count} (expected 1) at tolerance {tol:e}")]
    Degeneracy { count: usize, tol: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("perturbation too large: {0}")]
    Amplitude(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no threshold: {0}")]
    NoThreshold(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numeric(_) | Error::Degeneracy { .. } | Error::Io(_) => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
