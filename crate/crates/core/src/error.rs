use alloc::string::String;

use crate::geometry::SimilarityTransform2D;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    /// A graph (or graph fragment) violates a structural invariant.
    /// `context` names the offending node or edge.
    #[error("invalid graph at {context}: {message}")]
    Validation { context: String, message: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("way {way}: node reference {node} does not resolve")]
    UnresolvedNodeRef { way: String, node: i64 },

    #[error("registration failed: best IoU {iou:.4} below threshold {min_iou:.4}")]
    RegistrationFailed {
        iou: f64,
        min_iou: f64,
        best: SimilarityTransform2D,
    },

    #[error("graph has no traversable (intersection) nodes")]
    NoTraversableNodes,

    #[error("graph too small: {0}")]
    GraphTooSmall(String),

    #[error("distributions have mismatched support ({left} vs {right} states)")]
    MismatchedSupport { left: usize, right: usize },
}

impl Error {
    pub(crate) fn validation(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            context: context.into(),
            message: message.into(),
        }
    }
}
