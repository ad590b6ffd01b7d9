//! Design of offshore wind farm collection-system cable networks without an
//! external solver.
//!
//! The pipeline builds a capacitated spanning forest with Esau-Williams and
//! sizes its cables ([`tsh`]), removes cable crossings by edge swaps
//! ([`ccrh`]) and refines the feasible design by cancelling negative cycles
//! of a step-cost residual network ([`nccrh`]). [`milp_export`] writes the
//! matching mixed-integer model and a warm start for external solvers.

pub mod bellman_ford;
pub mod candidate_graph;
pub mod ccrh;
pub mod checker;
pub mod generate;
pub mod geometry;
pub mod milp_export;
pub mod model;
pub mod nccrh;
pub mod oracle;
pub mod pipeline;
pub mod svg;
pub mod tsh;

pub use candidate_graph::{build_candidate_graph, forward_arcs, CandidateGraph, ForwardArcSet};
pub use model::{CableCatalog, CableType, Instance, ModelError, NodeId, Point};
pub use tsh::{EdgeMatrix, EdgeRow};
