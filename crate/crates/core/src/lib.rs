//! Half-integral directed disjoint paths: exact oracles, depth-two brambles,
//! the bramble-based structural solver and the 3-SAT hardness gadget.

pub mod bramble;
pub mod error;
pub mod flow;
pub mod gadget;
pub mod graph;
pub mod io;
pub mod linker;
pub mod oracle;
pub mod weave;

pub use bramble::{Bramble, BrambleViolation, GridLabels};
pub use error::{Error, Result};
pub use graph::{
    double_vertex, double_vertices, lift_doubled_solution, reduce_half_to_integral,
    shortcut_walk, verify_solution, Contraction, Digraph, DoublingMap, LinkageInstance,
    PathSystem, Separation, SeparationViolation, VertexId, Violation,
};
pub use oracle::LinkageVerdict;
pub use weave::Verdict;
