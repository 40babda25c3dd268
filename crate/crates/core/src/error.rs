use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite coordinate or weight")]
    NonFinite,

    #[error("atom at {point:?} lies on the region boundary; shift the grid first")]
    AtomOnBoundary { point: Vec<f64> },

    #[error("atom at {point:?} lies on the level-{level} grid skeleton")]
    AtomOnSkeleton { point: Vec<f64>, level: u32 },

    #[error("path endpoint at {point:?} lies on the grid skeleton")]
    EndpointOnSkeleton { point: Vec<f64> },

    #[error("total masses differ: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    #[error("radius {radius} is not generic for the slice (a vertex lies on the level set)")]
    NonGenericRadius { radius: f64 },

    #[error("no generic radius found in the sampled window")]
    NoRadiusFound,

    #[error("current is not acyclic")]
    NotAcyclic,

    #[error("point {point:?} is not on a lattice vertex of the complex")]
    SnapError { point: Vec<f64> },

    #[error("too many terminals: {terminals} (max {max}) or Steiner nodes: {steiner} (max {max_steiner})")]
    TooManyTerminals {
        terminals: usize,
        max: usize,
        steiner: usize,
        max_steiner: usize,
    },

    #[error("invalid transport instance: {0}")]
    InstanceInvalid(String),

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
