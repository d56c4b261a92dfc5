use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// The disc (plus margin) does not fit strictly inside the unit square,
    /// or no feasible center exists at all.
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    /// Configuration file or parameter validation failure.
    #[error("config error: {0}")]
    Config(String),

    /// Mesh generation could not produce a valid triangulation.
    #[error("meshing error: {0}")]
    Meshing(String),

    /// Linear solver breakdown (matrix not positive definite, NaN, ...).
    #[error("solver error at step {step}: {message}")]
    Solver { step: usize, message: String },

    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Inconsistency detected between a mesh and data attached to it.
    #[error("mesh consistency error: {0}")]
    MeshConsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
