//! Convergence experiments and self-checks for the cubature solvers.

pub mod config;
pub mod converge;
pub mod svg;
pub mod verify;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] mkv_cubature::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
