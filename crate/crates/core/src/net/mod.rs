//! Substrate and slice graphs, residual accounting and topology statistics.

mod physical;
mod slice;
mod stats;

pub use physical::{DistanceMatrix, PhysicalEdge, PhysicalNetwork, PhysicalNode, SliceUsage};
pub use slice::{SliceRequest, VirtualEdge, VirtualNode};
pub use stats::{adjacency_stats, pearson_correlation, GraphStats};

use thiserror::Error;

/// Index of a physical node (0-based).
pub type NodeId = usize;
/// Index of a physical edge (0-based).
pub type EdgeId = usize;
/// Index of a virtual node inside its slice (0-based).
pub type VNodeId = usize;
/// Index of a virtual edge inside its slice (0-based).
pub type VEdgeId = usize;
/// Slice identifier, unique within a scenario.
pub type SliceId = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("edge ({0}, {1}) references a node outside the network")]
    UnknownNode(usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("committing slice {slice} would exceed capacity: {reason}")]
    InfeasibleCommit { slice: SliceId, reason: String },
    #[error("slice {0} is not committed")]
    UnknownSlice(SliceId),
    #[error("slice {0} is already committed")]
    DuplicateSlice(SliceId),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("invalid slice {slice}: {reason}")]
    InvalidSlice { slice: SliceId, reason: String },
}
