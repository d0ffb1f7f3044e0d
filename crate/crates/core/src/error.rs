use thiserror::Error;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Solver,
    Layout,
}

#[derive(Debug, Error)]
pub enum LensError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("cutlines {first} and {second} cross in the interior")]
    CrossingCutlines { first: usize, second: usize },

    #[error("partitioning error: {0}")]
    Partition(String),

    #[error(
        "parameter problem did not converge after {iterations} iterations (residual {residual:e})"
    )]
    Convergence { iterations: usize, residual: f64 },

    #[error("prevertex crowding between vertices {0} and {1}")]
    Crowding(usize, usize),

    #[error("inverse map did not converge at ({x}, {y})")]
    InverseNonConvergence { x: f64, y: f64 },

    #[error("level {d_w} is not below the maximum inscribed radius {max_radius}")]
    EmptyContour { d_w: f64, max_radius: f64 },

    #[error("stitching error on edge {from}->{to} at d_w = {d_w}: {message}")]
    Stitch {
        from: usize,
        to: usize,
        d_w: f64,
        message: String,
    },

    #[error("layout error: empty cell (ribbon {ribbon}, facade {facade})")]
    EmptyCell { ribbon: usize, facade: String },

    #[error("layout error: {0}")]
    Layout(String),

    #[error("binding error: {0}")]
    Binding(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl LensError {
    pub fn class(&self) -> ErrorClass {
        match self {
            LensError::InvalidInput(_)
            | LensError::Parse { .. }
            | LensError::Binding(_)
            | LensError::Io { .. }
            | LensError::Json(_) => ErrorClass::Input,
            LensError::Convergence { .. }
            | LensError::Crowding(..)
            | LensError::InverseNonConvergence { .. } => ErrorClass::Solver,
            LensError::Topology(_)
            | LensError::CrossingCutlines { .. }
            | LensError::Partition(_)
            | LensError::EmptyContour { .. }
            | LensError::Stitch { .. }
            | LensError::EmptyCell { .. }
            | LensError::Layout(_) => ErrorClass::Layout,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        LensError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = LensError> = std::result::Result<T, E>;
