use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid dimension {rows}x{cols}: both must be at least 2")]
    InvalidDimension { rows: usize, cols: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not connected: {components} components")]
    Disconnected { components: usize },

    #[error("unsupported decomposition: {0}")]
    UnsupportedDecomposition(String),

    #[error("embedding is not planar: V - E + F = {euler}, expected {expected}")]
    NotPlanar { euler: i64, expected: i64 },

    #[error("face residues sum to {0}, expected 0")]
    ResidueImbalance(i64),

    #[error(
        "min-cost flow infeasible: cut of {} nodes needs {required} units but has capacity {capacity}; \
         raise the arc capacity bound",
        cut.len()
    )]
    Infeasible {
        cut: Vec<usize>,
        required: i64,
        capacity: i64,
    },

    #[error("flows violate cycle constraint {row}: residual {residual}")]
    InconsistentFlow { row: usize, residual: i64 },

    #[error("no feasible solution")]
    NoFeasibleSolution,

    #[error("objective is unbounded below")]
    Unbounded,

    #[error("LP vertex is not integral: variable {var} = {value}")]
    NotIntegral { var: usize, value: f64 },

    #[error("unknown surface shape: {0}")]
    UnknownShape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large for exhaustive search: {0} (limit {1})")]
    TooLarge(usize, usize),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
