use std::fmt;

/// Result alias used across the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh mismatch: {left} vs {right}")]
    MeshMismatch { left: String, right: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("periodic Poisson problem is ill-posed: source has mean {mean:e} (norm {norm:e})")]
    NonZeroMean { mean: f64, norm: f64 },

    #[error("density is not strictly positive: min {min:e} at node {node}")]
    NonPositiveDensity { min: f64, node: usize },

    #[error("leader density {value:e} at node {node} is below the control floor {floor:e}")]
    NearVacuum { node: usize, value: f64, floor: f64 },

    #[error(
        "deconvolution undefined: kernel mode {mode:?} vanishes while the field mode is {field:e}"
    )]
    SingularMode { mode: [usize; 2], field: f64 },

    #[error("leader mass {mass} is infeasible: {reason}")]
    Infeasible { mass: f64, reason: String },

    #[error("numerical instability at step {step} (t = {t}): {what}; try a smaller time step")]
    Instability { step: usize, t: f64, what: String },

    #[error("negative {species} density {value:e} at node {node} (step {step})")]
    NegativeDensity {
        species: Species,
        value: f64,
        node: usize,
        step: usize,
    },

    #[error("empty position set")]
    EmptyPositions,

    #[error("config: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors raised by a simulation that lost numerical stability or
    /// positivity, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Instability { .. }
                | Error::NegativeDensity { .. }
                | Error::NearVacuum { .. }
                | Error::SingularMode { .. }
                | Error::NonZeroMean { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Leaders,
    Followers,
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Species::Leaders => f.write_str("leader"),
            Species::Followers => f.write_str("follower"),
        }
    }
}
