//! Error type shared by every fallible operation in the crate.

/// Errors reported by the toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A matrix or trajectory has the wrong size for the operation.
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// Hankel blocks with different depths or signal widths cannot be joined.
    #[error("cannot join hankel blocks: {what} differs ({left} vs {right})")]
    BlockMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    /// An operation that needs at least one element received none.
    #[error("{what} must not be empty")]
    Empty { what: &'static str },

    /// A past window longer than the recorded history.
    #[error("past window of {window} samples exceeds the {available} available")]
    WindowExceedsHistory { window: usize, available: usize },

    /// Trajectories disagree on the overlap they are supposed to share.
    #[error("overlap disagrees by {deviation:e}, more than the {tol:e} allowed")]
    OverlapMismatch { deviation: f64, tol: f64 },

    /// An overlap longer than one of the trajectories being woven.
    #[error("overlap of {overlap} samples exceeds trajectory lengths {first} and {second}")]
    OverlapTooLong {
        overlap: usize,
        first: usize,
        second: usize,
    },

    /// A recursion started with too little initial data.
    #[error("recursion needs {needed} initial samples, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    /// A trajectory that is not explained by the indicated family member.
    #[error("trajectory is not explained by family member {member}")]
    NotExplaining { member: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
