//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("density must be strictly positive: cell {index} has value {value}")]
    NonPositiveDensity { index: usize, value: f64 },
    #[error("grid needs at least 8 cells, got {0}")]
    GridTooSmall(usize),
    #[error("torus length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("field has {len} entries but the grid has {n_cells} cells")]
    LengthMismatch { len: usize, n_cells: usize },
    #[error("field entries must be finite: index {index} has value {value}")]
    NonFiniteValue { index: usize, value: f64 },
    #[error("swarm needs at least 2 agents, got {0}")]
    TooFewAgents(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("alpha must lie in (0,2), got {0}")]
    AlphaOutOfRange(f64),
    #[error("tau must be nonnegative, got {0}")]
    NegativeTau(f64),
    #[error("interaction radius must satisfy 0 < r0 <= length/4, got r0 = {r0} with length = {length}")]
    RadiusOutOfRange { r0: f64, length: f64 },
    #[error("kernel evaluated at zero separation")]
    SingularEvaluation,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("correction radius {r} outside the admissible range [{min}, {max}]")]
    RadiusOutOfRange { r: f64, min: f64, max: f64 },
    #[error("plain punctured quadrature requires alpha < 1, got alpha = {0}")]
    PlainSumTooSingular(f64),
    #[error("fields live on different grids")]
    GridMismatch,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HydroError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error("density lost positivity at cell {index} (t = {t}): value {value}")]
    PositivityLoss { index: usize, t: f64, value: f64 },
    #[error("time step {dt} exceeds the stability bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("stiff pair ({i}, {j}) at separation {r}: dt {dt} exceeds the pairwise stability bound")]
    StiffPairDetected { i: usize, j: usize, r: f64, dt: f64 },
    #[error("velocity hull violated beyond tolerance at dt = {dt}")]
    HullViolation { dt: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("dense eigensolver is capped at {max} cells, grid has {n}")]
    GridTooLarge { n: usize, max: usize },
    #[error("eigensolver failed: {0}")]
    EigSolverFailure(String),
}

/// Accumulates every schema violation found in a config so callers can
/// report them all at once.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid config:\n{}", .0.iter().map(|m| format!("  - {m}")).collect::<Vec<_>>().join("\n"))]
pub struct ConfigError(pub Vec<String>);
