//! Control/data-flow graphs over basic blocks and the module callgraph.

mod callgraph;
mod cdfg;

use thiserror::Error;

pub use callgraph::{
    build_callgraph, callgraph_features, CallEdge, CallGraph, CallGraphFeatures, CallNode,
    ChildSummary, CALLGRAPH_SLOT_COUNT, CALLGRAPH_SLOT_NAMES,
};
pub use cdfg::{
    build_cdfg, cdfg_features, count_fcus, longest_path, Cdfg, CdfgFeatures, DataEdge,
    CDFG_SLOT_COUNT, CDFG_SLOT_NAMES,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("function @{function} has no basic blocks")]
    EmptyFunction { function: String },
    #[error("top function @{name} not found")]
    UnknownTop { name: String },
}
