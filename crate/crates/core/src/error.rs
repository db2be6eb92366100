use thiserror::Error;

/// Errors surfaced by the estimators and the scenario runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GermError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polynomial parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("Newton projection did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("starting point lies within {radius:.3e} of the singular origin")]
    NearSingularPoint { radius: f64 },
    #[error("variety slice is empty: {0}")]
    EmptySlice(String),
    #[error("cluster count changed from {coarse} to {wide} between gap thresholds")]
    AmbiguousClustering { coarse: usize, wide: usize },
    #[error("neighborhood graph has {components} components where one was expected")]
    UndersampledGraph { components: usize },
    #[error("nodes {a} and {b} lie in different graph components")]
    Unreachable { a: usize, b: usize },
    #[error("seed sets overlap (min cross distance {distance:.3e})")]
    SeedOverlap { distance: f64 },
    #[error("no link point lies in the conflict band (band {band:.3e})")]
    EmptyConflict { band: f64 },
    #[error("horn exponent must exceed 1, got {alpha}")]
    HornInvalid { alpha: f64 },
    #[error("nearest-neighbour matching cost {cost:.3e} exceeds threshold {threshold:.3e}")]
    MatchFailed { cost: f64, threshold: f64 },
    #[error("derivative bound violated: {0}")]
    BoundViolated(String),
    #[error("not weighted homogeneous: {0}")]
    NotWeightedHomogeneous(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<GermError>,
    },
}

impl GermError {
    pub fn input(msg: impl Into<String>) -> Self {
        GermError::Input(msg.into())
    }

    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            e @ GermError::Stage { .. } => e,
            e => GermError::Stage {
                stage: stage.to_string(),
                source: Box::new(e),
            },
        }
    }
}

impl From<std::io::Error> for GermError {
    fn from(e: std::io::Error) -> Self {
        GermError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GermError>;
