//! The code property graph: node kinds, edges and the graph container.

mod graph;
mod node;

pub use graph::{CpgGraph, FunctionInfo, GraphError, PhiRecord, TranslationStats};
pub use node::{CpgEdge, CpgNode, EdgeKind, NewNode, NodeId, NodeKind, PropValue, Properties};
