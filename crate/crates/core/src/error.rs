use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain where a model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Sellmeier singularity at {wavelength_um} um (resonance C{term} = {resonance_um} um)")]
    Singularity {
        wavelength_um: f64,
        term: usize,
        resonance_um: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "no phase-matching root in detuning bracket [{lower:.6e}, {upper:.6e}] rad/s \
         (dk = {dk_lower:.6e} .. {dk_upper:.6e} 1/m)"
    )]
    NoSolution {
        lower: f64,
        upper: f64,
        dk_lower: f64,
        dk_upper: f64,
    },

    #[error("zero birefringence: only the degenerate solution exists")]
    DegenerateOnly,

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("joint spectrum grid too small: {0}")]
    GridTooSmall(String),

    #[error("filters removed the joint spectrum (survival {survival:.3e})")]
    FilteredToNothing { survival: f64 },

    #[error("ambiguous spectral peak: {regions} disjoint regions above half maximum")]
    AmbiguousPeak { regions: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("estimator undefined: {0}")]
    EstimatorUndefined(String),

    #[error("outside model validity: {0}")]
    OutOfValidity(String),

    #[error("parse error: {0}")]
    Parse(String),
}
