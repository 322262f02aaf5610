//! Crate-wide error type.

use crate::tree::Situation;
use thiserror::Error;

/// Errors produced by tree construction, local models, recursion engines
/// and convergence drivers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("state space must be non-empty")]
    EmptyStateSpace,

    #[error("duplicate state label `{0}`")]
    DuplicateStateLabel(String),

    #[error("state index {index} out of range for alphabet of size {alphabet}")]
    StateOutOfRange { index: usize, alphabet: usize },

    #[error("situations belong to different state spaces ({left} vs {right} states)")]
    MismatchedStateSpaces { left: usize, right: usize },

    #[error("path prefix of depth {prefix} is too short to decide membership in a depth-{situation} cylinder")]
    PrefixTooShort { prefix: usize, situation: usize },

    #[error("gamble has {got} entries but the state space has {expected}")]
    GambleDimensionMismatch { expected: usize, got: usize },

    #[error("gamble entry {index} is not finite")]
    NonFiniteGambleEntry { index: usize },

    #[error("mass vector entry {index} is negative ({value})")]
    NegativeMass { index: usize, value: f64 },

    #[error("mass sums to {sum}")]
    MassNotNormalized { sum: f64 },

    #[error("credal set needs at least one vertex")]
    EmptyCredalSet,

    #[error("probability interval {index} is invalid: lower {lower}, upper {upper}")]
    BadProbabilityInterval { index: usize, lower: f64, upper: f64 },

    #[error("probability intervals describe an empty credal set (sum of lowers {lower_sum}, sum of uppers {upper_sum})")]
    EmptyIntervalCredalSet { lower_sum: f64, upper_sum: f64 },

    #[error("local model has dimension {model} but the state space has {space} states")]
    ModelDimensionMismatch { model: usize, space: usize },

    #[error("no local model for situation {0} and no default provided")]
    MissingLocalModel(Situation),

    #[error("process value is zero at situation {0}; multiplier undefined")]
    ZeroProcessValue(Situation),

    #[error("weights must be non-negative and sum to 1 (got sum {sum})")]
    BadWeights { sum: f64 },

    #[error("convex combination input {index} is not positive at situation {situation} (value {value})")]
    NonPositiveCombinationInput {
        index: usize,
        situation: Situation,
        value: f64,
    },

    #[error("convex combination needs at least one process")]
    EmptyCombination,

    #[error("certificate does not cover situation {situation} to relative depth {relative}: checked depth {checked}")]
    CertificateTooShallow {
        situation: Situation,
        relative: usize,
        checked: usize,
    },

    #[error("process is not a certified supermartingale (max violation {max_violation} > tol {tol})")]
    NotCertified { max_violation: f64, tol: f64 },

    #[error("gamble table has {got} entries, expected {expected} for horizon {horizon}")]
    BadTableSize {
        expected: usize,
        got: usize,
        horizon: usize,
    },

    #[error("table entry {index} is not finite")]
    NonFiniteTableEntry { index: usize },

    #[error("dense representation would need {cells} cells, above the limit {limit}")]
    DenseLimitExceeded { cells: u128, limit: usize },

    #[error("situation depth {depth} exceeds the gamble horizon {horizon}")]
    DepthBeyondHorizon { depth: usize, horizon: usize },

    #[error("strategy enumeration would need {strategies} strategies, above the limit {limit}")]
    OracleLimitExceeded { strategies: u128, limit: u64 },

    #[error("oracle supports only precise and credal-vertex models; situation {0} resolves to another kind")]
    OracleUnsupportedModel(Situation),

    #[error("upward driver requires a non-decreasing family with a uniform lower bound")]
    NotAnUpwardFamily,

    #[error("this driver requires a declared uniform lower bound on the family")]
    MissingLowerBound,

    #[error("family member {n} dips to {value} at {witness}, below the declared uniform lower bound {bound}")]
    LowerBoundViolation {
        n: usize,
        witness: Situation,
        value: f64,
        bound: f64,
    },

    #[error("family is not {declared:?} as declared: f_{n}({witness}) moves the wrong way ({before} -> {after})")]
    MonotonicityViolation {
        declared: crate::approximation::Monotonicity,
        n: usize,
        witness: Situation,
        before: f64,
        after: f64,
    },

    #[error("iterate sequence decreased from {before} to {after} at n = {n}; upper expectations of a non-decreasing family must be non-decreasing")]
    IterateOrderViolation { n: usize, before: f64, after: f64 },

    #[error("cut schedule is empty")]
    EmptyCutSchedule,

    #[error("two-sided cut requires B >= A (got A {a}, B {b})")]
    BadCutPair { a: f64, b: f64 },

    #[error("alpha must be > 1 (got {0})")]
    BadAlpha(f64),

    #[error("rational couple must satisfy 0 < a < b (got {a}, {b})")]
    BadRationalCouple { a: String, b: String },

    #[error("levy construction needs as many weights as couples ({couples} couples, {weights} weights)")]
    CoupleWeightMismatch { couples: usize, weights: usize },

    #[error("prefix exceeds the construction's depth bound ({depth} > {bound})")]
    PrefixBeyondDepthBound { depth: usize, bound: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
