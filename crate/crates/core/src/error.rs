use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node {node} out of range (metric has {len} nodes)")]
    InvalidNode { node: usize, len: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("triangle inequality violated: d({u},{w}) > d({u},{v}) + d({v},{w})")]
    TriangleInequality { u: usize, v: usize, w: usize },

    #[error("instance has {n} links, exhaustive search is limited to {limit}")]
    SizeGuard { n: usize, limit: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    /// A produced channel or slot did not satisfy the SINR constraint.
    /// Never expected; signals a bug in the power assignment.
    #[error("group {group} failed SINR verification on links {links:?} (margins {margins:?})")]
    Verification {
        group: usize,
        links: Vec<usize>,
        margins: Vec<f64>,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Whether the error stems from malformed caller input rather than a failed check.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidNode { .. }
                | Error::InvalidInput(_)
                | Error::TriangleInequality { .. }
                | Error::SizeGuard { .. }
                | Error::Infeasible
                | Error::Unbounded
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
