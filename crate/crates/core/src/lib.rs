//! Combinatorial local search for restricted max-min fair allocation
//! (the "Santa Claus" problem with restricted valuations).
//!
//! The solver grows an alternating tree of thin edges and fat-resource
//! alternating paths, collapses layers lazily once enough of them become
//! immediately addable, and wraps the per-target search in a binary search
//! over the target value `tau`. Every successful probe yields an allocation
//! in which each player receives value at least `tau / beta`.
//!
//! All comparisons against fractional thresholds use exact rationals.

pub mod cli;
pub mod edges;
pub mod error;
pub mod flownet;
pub mod instance;
pub mod localsearch;
pub mod oracle;
pub mod solver;

/// Exact rational used for thresholds and algorithm constants.
pub type Rational = num_rational::Ratio<i128>;

pub use edges::{
    beta_minimal_subset, build_minimal_thin_edge, classify_resources, validate_params,
    Classification, EdgeClass, FatEdge, ParamReport, Params, ThinEdge,
};
pub use error::{Error, Result};
pub use flownet::{
    augment_from, build_graph, canonical_decomposition, max_disjoint_paths, rerouted_solution,
    CanonicalDecomposition, FlowGraph, Node, PathSolution,
};
pub use instance::{
    allocation_min_value, generate_random, parse_allocation, parse_instance, verify_allocation,
    write_allocation, write_instance, Allocation, Instance,
};
pub use localsearch::{
    alternate_along, check_invariants, extend_matching, init_state, signature, ExtendError,
    ExtendOptions, ExtendOutcome, InvariantCheck, InvariantReport, Layer, MatchedEdge,
    PartialMatching, SearchState,
};
pub use oracle::{brute_force_disjoint_paths, brute_force_opt, is_minimal_edge};
pub use solver::{
    max_fat_matching, solve, solve_for_tau, Phase, ProbeOutcome, ProbeRecord, ProbeSuccess,
    SolveOptions, SolveReport, TraceEvent, TraceSink,
};

pub(crate) fn rat(v: u64) -> Rational {
    Rational::from_integer(v as i128)
}
