use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("invalid field data: {0}")]
    InvalidField(String),

    #[error("invalid exponent: {name} = {value} ({constraint})")]
    InvalidExponent {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("field is not divergence-free: residual {residual:e} exceeds {bound:e}")]
    NotDivergenceFree { residual: f64, bound: f64 },

    #[error("field is not mean-zero: mean {0:e}")]
    NotMeanZero(f64),

    #[error("time quadrature did not converge: tail {tail:e} vs total {total:e}")]
    QuadratureNonConvergence { tail: f64, total: f64 },

    #[error("CFL violation: dt = {dt:e} exceeds limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("resolution exceeded: {0}")]
    Resolution(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Validate a Lebesgue or summability exponent in `[1, ∞]`.
pub(crate) fn check_exponent(name: &'static str, value: f64) -> Result<()> {
    if value.is_nan() || value < 1.0 {
        return Err(Error::InvalidExponent {
            name,
            value,
            constraint: "must lie in [1, inf]",
        });
    }
    Ok(())
}
