use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid geometry: non-finite coordinate")]
    NonFinite,
    #[error("invalid geometry: radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("invalid geometry: degenerate polygon ({0})")]
    Degenerate(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostmapError {
    #[error("invalid goal: ({x}, {y}) lies in an occupied cell")]
    GoalOccupied { x: f64, y: f64 },
    #[error("position ({x}, {y}) is outside the map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid map: {0}")]
    InvalidMap(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("invalid state: robot {robot} at ({x}, {y}) is in an occupied cell")]
    InvalidState { robot: usize, x: f64, y: f64 },
    #[error("invalid problem: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Costmap(#[from] CostmapError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("time {0} outside [0, 1]")]
    TimeOutOfRange(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("steps must be at least 1")]
    ZeroSteps,
    #[error("velocity field returned a non-finite value")]
    NonFiniteVelocity,
    #[error("token {index}: distribution sums to {sum}")]
    InvalidDistribution { index: usize, sum: f64 },
    #[error("invalid token {0}")]
    InvalidToken(u16),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("budget {0} exceeds the maximum of {1}")]
    Budget(usize, usize),
    #[error("non-finite transform")]
    NonFinite,
    #[error("expected {expected} tokens, got {got}")]
    TokenCount { expected: usize, got: usize },
    #[error("invalid token value {0}")]
    InvalidToken(u16),
    #[error("external policy: {0}")]
    External(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unknown object id {0}")]
    UnknownObject(usize),
    #[error("validation: {0}")]
    Validation(String),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema version {0}")]
    Version(u32),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
