use thiserror::Error;

/// Errors raised by construction and evaluation routines.
///
/// Verification outcomes are not errors: they are reported through
/// [`crate::cert::Certificate`] values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter chain violated at `{name}`: {constraint}")]
    ChainViolation { name: String, constraint: String },

    #[error("missing or invalid field `{0}`")]
    MissingField(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("branch error: {0}")]
    Branch(String),

    #[error("infeasible: {0}")]
    Feasibility(String),

    #[error("corridor violated at x = {x}: value {value} outside [{lower}, {upper}]")]
    CorridorViolation {
        x: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("point outside field region: {0}")]
    Region(String),

    #[error("gradient vanishes at {0:?}")]
    NotRegular([f64; 4]),

    #[error("level sets are not contact at {point:?} (tangency term {value})")]
    NotContact { point: [f64; 4], value: f64 },

    #[error("no lambda up to {0} makes the composition strictly plurisubharmonic")]
    Exhausted(f64),

    #[error("slices {tau_a} and {tau_b} are not nested along ray {ray}")]
    Foliation { tau_a: f64, tau_b: f64, ray: usize },

    #[error("point is not swept by the family: {0}")]
    OutOfFoliation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn chain(name: &str, constraint: &str) -> Self {
        Error::ChainViolation {
            name: name.to_string(),
            constraint: constraint.to_string(),
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn feasibility(msg: impl Into<String>) -> Self {
        Error::Feasibility(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
