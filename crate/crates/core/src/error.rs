use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("AP placement infeasible: no valid position after {attempts} attempts (L={aps}, side={side} m, spacing={spacing} m)")]
    InfeasiblePlacement {
        attempts: usize,
        aps: usize,
        side: f64,
        spacing: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid cluster set: {0}")]
    InvalidClusters(String),

    #[error("invalid stream allocation: {0}")]
    InvalidAllocation(String),

    #[error("weighted-MSE objective increased by {increase:e} at iteration {iteration} ({block} update)")]
    NonMonotone {
        iteration: usize,
        block: &'static str,
        increase: f64,
    },

    #[error("{0} did not converge within {1} iterations")]
    NotConverged(&'static str, usize),

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonMonotone { .. } | Error::NotConverged(..) => true,
            Error::Trial { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
