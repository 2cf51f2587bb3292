//! Error type shared by the solver stack.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("inadmissible state: {0}")]
    Inadmissible(String),

    #[error("degenerate edge: {0}")]
    DegenerateEdge(String),

    #[error("Roe average not diagonalizable: {0}")]
    RoeDegenerate(String),

    #[error("vacuum formation in Riemann problem")]
    Vacuum,

    #[error("root bracketing failed: {0}")]
    BracketFailure(String),

    #[error("fixed-point iteration did not converge after {iterations} sweeps (residual {residual:.3e})")]
    FdiNonConvergence { iterations: usize, residual: f64 },

    #[error("solver aborted: {0}")]
    Abort(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
