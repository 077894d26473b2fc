use thiserror::Error;

/// Everything that can go wrong while building or evaluating a history family.
///
/// Deviations are reported as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix literal is ragged: row {row} has {found} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("not Hermitian: max |M - M†| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("not positive semidefinite: min eigenvalue = {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("trace is not one: |Tr M - 1| = {deviation:e}")]
    TraceNotOne { deviation: f64 },
    #[error("not idempotent: max |P² - P| = {deviation:e}")]
    NotIdempotent { deviation: f64 },
    #[error("not unitary: max |U†U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("projectors {a} and {b} are not orthogonal: max |P_a P_b| = {deviation:e}")]
    NotOrthogonal { a: usize, b: usize, deviation: f64 },
    #[error("projectors do not sum to the identity: max |ΣP - I| = {deviation:e}")]
    NotComplete { deviation: f64 },
    #[error("duplicate spectral label {0}")]
    DuplicateLabel(usize),
    #[error("unknown spectral label {0}")]
    UnknownLabel(usize),
    #[error("outcome must contain at least one label")]
    EmptyOutcome,
    #[error("outcomes belong to different resolutions")]
    ResolutionMismatch,
    #[error("partition does not assign label {0} to a block")]
    PartitionNotTotal(usize),
    #[error("partition block {0} is empty")]
    EmptyBlock(usize),

    #[error("time grid must be strictly increasing (violated at slot {0})")]
    NonMonotoneTimes(usize),
    #[error("time grid needs at least one slot")]
    EmptyGrid,
    #[error("time grid contains a non-finite time at slot {0}")]
    NonFiniteTime(usize),
    #[error("expected {expected} step unitaries, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("slot {slot} out of range for {slots} slots")]
    SlotOutOfRange { slot: usize, slots: usize },

    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("histories belong to different families or spans")]
    FamilyMismatch,
    #[error("family has {size} fine-grained histories, above the cap of {cap}")]
    FamilyTooLarge { size: usize, cap: usize },
    #[error("conditioning event has probability {probability:e}, below the zero threshold")]
    ZeroConditionProbability { probability: f64 },
    #[error("state set is empty")]
    EmptyStateSet,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
