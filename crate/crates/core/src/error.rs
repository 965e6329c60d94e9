use thiserror::Error;

use crate::dynamics::State;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("flight envelope error: {0}")]
    Envelope(String),
    #[error("no CAS/Mach crossover for {v_cas:.3} m/s CAS and Mach {mach:.4} in the climb envelope")]
    NoCrossover { v_cas: f64, mach: f64 },
    #[error("numerical error at t={:.3} s, h={:.3} m, v={:.3} m/s: {detail}", .state.t, .state.h, .state.v)]
    Numerical { state: State, detail: String },
    #[error("objective returned {value} for candidate {index} at {point:?}")]
    NonFiniteObjective { index: usize, point: Vec<f64>, value: f64 },
    #[error("observation prefix has {len} samples, need more than {needed}")]
    PrefixTooShort { len: usize, needed: usize },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("config error on \"{key}\": {msg}")]
    Config { key: String, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}
