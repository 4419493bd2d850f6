use thiserror::Error;

use crate::audit::Constraint;
use crate::model::{Link, NodeId};

/// Errors raised anywhere in the scheduling pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmsError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("nodes {0} and {1} are at the same position")]
    CoincidentNodes(NodeId, NodeId),

    #[error("angle {0} deg is outside [0, 180]")]
    AngleOutOfRange(f64),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("links {0} and {1} share an endpoint and cannot be active together")]
    AdjacentLinks(Link, Link),

    #[error("multicast group is empty")]
    EmptyGroup,

    #[error("link {0} has zero achievable rate")]
    InfeasibleLink(Link),

    #[error("{pairings} pairings cannot fit into {slots} serial slots")]
    TooFewSlots { pairings: usize, slots: u64 },

    #[error("instance too large for the exact solver: {what} = {got} exceeds {cap}")]
    InstanceTooLarge { what: &'static str, got: usize, cap: usize },

    #[error("constraint `{constraint}` violated: {detail}")]
    ConstraintViolated { constraint: Constraint, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EmsError {
    fn from(e: std::io::Error) -> Self {
        EmsError::Io(e.to_string())
    }
}

impl From<csv::Error> for EmsError {
    fn from(e: csv::Error) -> Self {
        EmsError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for EmsError {
    fn from(e: serde_json::Error) -> Self {
        EmsError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EmsError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> EmsError {
    EmsError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
