use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid atomic level `{0}` (expected g, e or m)")]
    InvalidLevel(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("dimension mismatch for {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("photon sector must be n >= 1, got {0}")]
    InvalidSector(usize),

    #[error("analytic eigenstates are singular at omega_L = 0; diagonalize the block Hamiltonian numerically")]
    DegenerateLimit,

    #[error("steady state is not unique: {0}")]
    NonUniqueSteadyState(String),

    #[error("steady state is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("steady-state residual {residual:e} exceeds tolerance {tolerance:e}")]
    InaccurateSteadyState { residual: f64, tolerance: f64 },

    #[error("integration failed at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("intracavity photon number {n_cav:e} is below the vacuum guard; g2 is undefined")]
    VacuumCorrelation { n_cav: f64 },

    #[error("no grid point reaches the photon floor {photon_floor}")]
    Infeasible { photon_floor: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("output error: {0}")]
    Output(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Output(e.to_string())
    }
}
