//! Transition constraints: configuration graphs, Hamiltonian-path
//! feasibility, walk automata, the walk search and the hybrid loop.

pub mod cp;
pub mod graph;
pub mod hamiltonian;
pub mod hybrid;

pub use cp::{cp_walk_search, CpOutcome, CpProblem, DEFAULT_CP_NODE_BUDGET};
pub use graph::{build_cg, CompactConfigGraph, ConfigGraph, WalkAutomaton};
pub use hamiltonian::{hamiltonian_path, DEFAULT_STATE_BUDGET};
pub use hybrid::{hybrid_solve, HybridEvent, HybridOptions, HybridResult, HybridState, HybridStats};
