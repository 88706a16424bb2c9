use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the range where the object is defined.
    InvalidParameter(&'static str),
    /// Evaluation at a point where the map is undefined (the origin for Kelvin).
    Domain(&'static str),
    /// `√δ|log δ| = -1/β` has no root in `(0, e⁻²)`.
    NoRoot { beta: f64 },
    /// Integrand decays too slowly at infinity (or blows up too fast).
    NonIntegrable,
    /// Integrand fails the sampled symmetry check required by a reduction.
    SymmetryViolation { measured: f64, tolerance: f64 },
    /// A concentration point sits on the boundary of an integration region.
    HotSpotOnBoundary,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::NoRoot { beta } => write!(
                f,
                "no concentration scale for beta = {beta}: need beta < -e/2"
            ),
            Error::NonIntegrable => write!(f, "integrand is not integrable over the region"),
            Error::SymmetryViolation {
                measured,
                tolerance,
            } => write!(
                f,
                "integrand is not rotation invariant: violation {measured:e} > {tolerance:e}"
            ),
            Error::HotSpotOnBoundary => {
                write!(f, "a concentration point lies on the region boundary")
            }
        }
    }
}

impl core::error::Error for Error {}
