use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no worker would accept a wage at or below p_min = {p_min}: H(w) ~ 0 on (-inf, p_min]")]
    NoAcceptableWage { p_min: f64 },

    #[error("wage-offer solver failed at step {step} (p = {p}): {reason}")]
    SolverStep {
        step: usize,
        p: f64,
        reason: String,
    },

    #[error("wage-offer curve not strictly increasing at step {step}; reduce the step size")]
    NonMonotoneCurve { step: usize },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("unemployment rate {0} outside (0, 1)")]
    UnemploymentOutOfRange(f64),

    #[error("implied wage density is negative at w = {w}")]
    NegativeDensity { w: f64 },

    #[error("reservation-wage CDF underflows at w = {w}; H inconsistent with the observed wage support")]
    ReservationUnderflow { w: f64 },

    #[error("wage density and reservation density both vanish at w = {w} (grid index {index})")]
    ZeroDensity { w: f64, index: usize },

    #[error("non-finite likelihood integrand at b = {b}")]
    NonFiniteIntegrand { b: f64 },

    #[error("wage density is zero at observed wage {w}; check truncation against the wage support")]
    ZeroWageDensity { w: f64 },

    #[error("spell schema violation: {0}")]
    Schema(String),

    #[error("spell file row {row}: {reason}")]
    Row { row: usize, reason: String },

    #[error("too few observations: {got} (need at least {need})")]
    TooFewObservations { got: usize, need: usize },

    #[error("wage sample has zero variance")]
    ZeroVariance,

    #[error("sample cannot identify the model: {0}")]
    Identification(String),

    #[error("all {starts} optimizer starts failed to converge")]
    NoConvergence { starts: usize },

    #[error("intersection of productivity supports is empty")]
    EmptySupport,

    #[error("experiment {id}: {source}")]
    Experiment {
        id: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("calibration hit the search boundary at ({p_min}, {alpha})")]
    CalibrationBoundary { p_min: f64, alpha: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverStep { .. }
                | Error::NonMonotoneCurve { .. }
                | Error::Quadrature(_)
                | Error::UnemploymentOutOfRange(_)
                | Error::NegativeDensity { .. }
                | Error::ReservationUnderflow { .. }
                | Error::ZeroDensity { .. }
                | Error::NonFiniteIntegrand { .. }
                | Error::ZeroWageDensity { .. }
                | Error::NoConvergence { .. }
                | Error::CalibrationBoundary { .. }
                | Error::Experiment { .. }
        )
    }
}
