use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} bodies, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("body {body} too close to a pole (theta = {theta:e})")]
    Singularity { body: usize, theta: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    Accuracy { tolerance: f64, estimate: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("hierarchy violation: K_{term} depends on {variable}")]
    Structure { term: usize, variable: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sample {sample}: {source}")]
    AtSample {
        sample: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    pub fn at_sample(self, sample: usize) -> Self {
        Error::AtSample {
            sample,
            source: Box::new(self),
        }
    }

    /// Innermost error, with step/sample wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } | Error::AtSample { source, .. } => source.root(),
            e => e,
        }
    }

    /// Step index carried by the outermost step wrapper, if any.
    pub fn step_index(&self) -> Option<usize> {
        match self {
            Error::AtStep { step, .. } => Some(*step),
            Error::AtSample { source, .. } => source.step_index(),
            _ => None,
        }
    }
}
