use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("absolute continuity violated: p > 0 where q = 0 near {at}")]
    AbsoluteContinuity { at: f64 },

    #[error("simulation diverged at t = {time}")]
    SimulationDiverged { time: f64 },

    #[error("controller produced a non-finite command: {0}")]
    Controller(String),

    #[error("planner diverged: inequality unsatisfied for all c <= {c_max}")]
    PlannerDiverged { c_max: f64 },

    #[error("planned budget {n} exceeds the reliability cap {cap}")]
    Infeasible { n: u64, cap: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
