//! Game-theoretic upper and lower expectations on imprecise probability
//! trees.
//!
//! An imprecise probability tree attaches a coherent upper expectation
//! on next-state gambles to every situation of an event tree over a
//! finite state space. This crate computes the induced global upper and
//! lower expectations of path variables:
//!
//! * exactly, by backward recursion, for variables that only depend on
//!   the first n states ([`global_expectation`]);
//! * in the limit, for unbounded or extended-real variables, through
//!   monotone approximation and cut drivers ([`approximation`]);
//! * and it ships a supermartingale laboratory ([`processes`], [`levy`])
//!   for the betting-strategy side of the theory: depth-bounded
//!   supermartingale certification, clipping and convex-combination
//!   closures, multiplier characterizations, and the constructive
//!   zero-one-law crossing supermartingales.
//!
//! All types are immutable after construction and all evaluators are
//! pure, so values can be shared and evaluated concurrently; within one
//! local expectation the summation order is fixed, keeping results
//! bit-identical regardless of evaluation order across situations.

pub mod approximation;
pub mod error;
pub mod global_expectation;
pub mod levy;
pub mod local_models;
pub mod processes;
pub mod tree;

pub use error::{Error, Result};
pub use tree::{
    cylinder_contains, relate, validate_cut, Cut, CutStatus, ImpreciseTree, ModelMap, PathPrefix,
    Relation, Situation, StateSpace,
};

pub use local_models::{
    check_coherence, check_coherence_of, CoherenceCheck, CoherenceReport, LocalGamble, LocalModel,
};

pub use processes::{
    certify_supermartingale, clip, convex_combine, difference, finite_levy_bound, multiplier,
    product, summation, GambleProcess, RealProcess, SupermartingaleCertificate,
};

pub use global_expectation::{
    backward_recursion, certify_expectation_process, lower_backward_recursion, lower_expectation,
    oracle_enumerate, upper_expectation, ExpectationProcess, NMeasurableGamble,
};

pub use approximation::{
    default_lower_schedule, default_upper_schedule, downward_counterexample, fatou_bound,
    hitting_time_family, lower_cut_limit, lower_expectation_via_cuts, two_sided_cut_limit,
    upward_limit, ConvergenceReport, CounterexampleReport, CutVariable, DriverConfig, FatouReport,
    Iterate, Monotonicity, VariableFamily, Verdict,
};

pub use levy::{
    build_levy_supermartingale, default_couples, detect_cuts, normalize_gamble, CutTrace,
    GrowthCheck, LevyConstruction, RationalCouple,
};

#[cfg(test)]
mod thread_safety {
    use super::*;

    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn shared_types_are_send_and_sync() {
        assert_send_sync::<StateSpace>();
        assert_send_sync::<Situation>();
        assert_send_sync::<ImpreciseTree>();
        assert_send_sync::<LocalModel>();
        assert_send_sync::<RealProcess>();
        assert_send_sync::<GambleProcess>();
        assert_send_sync::<NMeasurableGamble>();
        assert_send_sync::<ExpectationProcess>();
        assert_send_sync::<VariableFamily>();
        assert_send_sync::<LevyConstruction>();
    }
}
