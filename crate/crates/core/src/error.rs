use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pfaffian requested for odd dimension {0}")]
    OddDimension(usize),
    #[error("matrix is not skew-symmetric (defect {defect:e} at ({row}, {col}))")]
    NotSkew { row: usize, col: usize, defect: f64 },
    #[error("matrix is not square: {rows} entries for dimension {dim}")]
    NotSquare { rows: usize, dim: usize },
    #[error("quadrature did not converge: estimate {value:e}, error {error:e} after {panels} panels")]
    NoConvergence {
        value: f64,
        error: f64,
        panels: usize,
    },
    #[error("non-finite integrand value encountered")]
    NonFinite,
    #[error("imaginary residual {residual:e} exceeds tolerance for value {value:e}")]
    ImagResidualTooLarge { value: f64, residual: f64 },
    #[error("measure is numerically degenerate at degree {degree}")]
    DegenerateMeasure { degree: usize },
    #[error("tensor rule needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("measure cannot be sampled: {0}")]
    NonSamplable(String),
    #[error("reduced measure has divergent or invalid total mass")]
    NonIntegrableWeight,
    #[error("denominator integral vanishes")]
    DivisionByZeroMass,
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OddDimension(_) => "odd_dimension",
            Error::NotSkew { .. } => "not_skew",
            Error::NotSquare { .. } => "not_square",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NonFinite => "non_finite",
            Error::ImagResidualTooLarge { .. } => "imag_residual_too_large",
            Error::DegenerateMeasure { .. } => "degenerate_measure",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::NonSamplable(_) => "non_samplable",
            Error::NonIntegrableWeight => "non_integrable_weight",
            Error::DivisionByZeroMass => "division_by_zero_mass",
            Error::ChartMismatch(_) => "chart_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse(_) => "parse",
        }
    }
}
