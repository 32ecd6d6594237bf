use thiserror::Error;

/// Errors raised by the solvers and the scenario harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-physical state in cell {cell}: rho = {rho:e}, theta = {theta:e}")]
    NonPhysicalState { cell: isize, rho: f64, theta: f64 },

    #[error("time step collapsed to {dt:e} (perturbation too negative to keep f >= 0)")]
    TimeStepCollapse { dt: f64 },

    #[error("velocity grid is not symmetric about zero; specular reflection needs v -> -v to map nodes to nodes")]
    AsymmetricGrid,

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("vacuum is generated by the Riemann data (pressure positivity fails)")]
    Vacuum,

    #[error("at t = {time:e} (step {step}): {source}")]
    AtStep {
        time: f64,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
