use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An evaluator was queried outside the set it is defined on.
    #[error("{what}: state {state:?} is outside the domain")]
    Domain { what: &'static str, state: Vec<f64> },

    /// φ₂, φ₃ or a jump factor ψ evaluated to something non-positive.
    #[error("{what} must be strictly positive, got {value} at state {state:?}")]
    Positivity {
        what: &'static str,
        value: f64,
        state: Vec<f64>,
    },

    #[error("diffusion matrix is not positive semi-definite at state {state:?} (pivot {pivot})")]
    NotPsd { state: Vec<f64>, pivot: f64 },

    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("rejection bound {bound} violated by weight {weight} at state {state:?}")]
    RejectionBound {
        bound: f64,
        weight: f64,
        state: Vec<f64>,
    },

    #[error("jump intensity {intensity} exceeds thinning bound {bound} at state {state:?}")]
    IntensityBound {
        bound: f64,
        intensity: f64,
        state: Vec<f64>,
    },

    #[error("time {0} is not a point of the simulation grid")]
    OffGrid(f64),

    #[error("path {index}: {source}")]
    Path {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, x: &[f64]) -> Self {
        Error::Domain {
            what,
            state: x.to_vec(),
        }
    }

    pub(crate) fn positivity(what: &'static str, value: f64, x: &[f64]) -> Self {
        Error::Positivity {
            what,
            value,
            state: x.to_vec(),
        }
    }

    pub(crate) fn at_path(self, index: u64) -> Self {
        match self {
            e @ Error::Path { .. } => e,
            e => Error::Path {
                index,
                source: Box::new(e),
            },
        }
    }
}
