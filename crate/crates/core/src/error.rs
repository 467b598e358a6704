use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid functional: {0}")]
    InvalidFunctional(String),

    #[error("functional has zero total variation")]
    DegenerateFunctional,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("argument principle counted {winding} roots but Newton polishing found {found}; refine the grid")]
    WindingMismatch { winding: usize, found: usize },

    #[error("contour passes within {distance:e} of a root near {re}+{im}i; perturb the region")]
    ContourThroughRoot { re: f64, im: f64, distance: f64 },

    #[error("search region cannot bound the non-critical spectrum: {0}")]
    InconclusiveRegion(String),

    #[error("system is not critical: {0}")]
    NotCritical(String),

    #[error("bilinear-form normalization matrix is singular (det = {det:e})")]
    SingularNormalization { det: f64 },

    #[error("fitted decay rate {kappa} is not positive")]
    NonDecaying { kappa: f64 },

    #[error("time {t} precedes stored history (oldest {oldest})")]
    OutOfWindow { t: f64, oldest: f64 },

    #[error("step {dt:e} exceeds the stability bound {bound:e}")]
    StiffStep { dt: f64, bound: f64 },

    #[error("averaged variance 2*C1^2 = {0} is negative")]
    NegativeVariance(f64),

    #[error("quadrature did not converge: relative change {change:e} > {tol:e}")]
    QuadratureNonConverged { change: f64, tol: f64 },

    #[error("empty sample")]
    Empty,

    #[error("log-log fit needs positive data, got {0}")]
    NonPositive(f64),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidFunctional(_) => "InvalidFunctional",
            Error::DegenerateFunctional => "DegenerateFunctional",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::WindingMismatch { .. } => "WindingMismatch",
            Error::ContourThroughRoot { .. } => "ContourThroughRoot",
            Error::InconclusiveRegion(_) => "InconclusiveRegion",
            Error::NotCritical(_) => "NotCritical",
            Error::SingularNormalization { .. } => "SingularNormalization",
            Error::NonDecaying { .. } => "NonDecaying",
            Error::OutOfWindow { .. } => "OutOfWindow",
            Error::StiffStep { .. } => "StiffStep",
            Error::NegativeVariance(_) => "NegativeVariance",
            Error::QuadratureNonConverged { .. } => "QuadratureNonConverged",
            Error::Empty => "Empty",
            Error::NonPositive(_) => "NonPositive",
            Error::UnknownScheme(_) => "UnknownScheme",
        }
    }
}
