//! Hospitals/residents stable matching under capacity expansion and
//! reduction: instance model, stability predicates, deferred acceptance and
//! enumeration oracles, exact capacity solvers, reduction gadgets, seeded
//! generators and the text format.

pub mod engines;
pub mod format;
pub mod gadgets;
pub mod gen;
pub mod instance;
pub mod solvers;
pub mod stability;

pub use engines::{
    break_ties, deferred_acceptance, enumerate_stable, enumerate_weakly_stable, tie_sizes, EngineError,
    TieResolutions, DEFAULT_LIMIT,
};
pub use format::{
    parse_document, parse_instance, parse_matching, serialize_document, serialize_instance, serialize_matching,
    Document, ParseError,
};
pub use gen::{builtin_counterexample, generate, parse_manifest, CapacityMode, GenError, GenSpec, ListLength, SplitMix64};
pub use instance::{
    apply_delta, is_normalized, normalize_instance, validate_instance, AgentId, CapacityDelta, DeltaError, Direction,
    Instance, InstanceError, Matching, MatchingError, PartitionBudgets, PartitionError, PreferenceList, Rank, Rule,
    Side, Violation,
};
pub use solvers::{
    heuristic_borda, heuristic_majority, solve, solve_expand_single, solve_min_avg_expand, solve_min_avg_reduce,
    solve_min_w_smt, solve_partition, solve_with_heuristic, Budget, Heuristic, Objective, ProblemKind, ProblemSpec,
    SearchMode, SolveError, SolveResult, SolverConfig, DEFAULT_GUARD,
};
pub use stability::{avg_rank, blocking_pairs, cardinality, is_blocking_pair, is_stable, rank_of, StabilityError};
