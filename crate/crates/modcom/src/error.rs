//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry, backends, and the current calculus.
#[derive(Debug, Error)]
pub enum Error {
    // ---- geometry ----
    #[error("region does not fit inside the lattice extent")]
    RegionNotInLattice,
    #[error("cell set is empty")]
    EmptyRegion,
    #[error("cell set is not edge-connected")]
    NotConnected,
    #[error("cell set is not simply connected")]
    NotSimplyConnected,
    #[error("regions are not pairwise disjoint")]
    RegionsOverlap,
    #[error("deformation move is invalid: {0}")]
    InvalidMove(String),
    #[error("partition has no geometric center; build it from a disk")]
    MissingCenter,

    // ---- dense backend ----
    #[error("total Hilbert-space dimension {0} exceeds the supported cap {1}")]
    DimTooLarge(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("site index {0} out of range for layout with {1} sites")]
    SiteOutOfRange(usize, usize),
    #[error("site blocks must be disjoint")]
    BlocksOverlap,
    #[error("site blocks must cover the full layout for this operation")]
    BlocksIncomplete,
    #[error("operator is not a density operator: {0}")]
    NotDensityOperator(String),
    #[error("linear-algebra backend failure: {0}")]
    Linalg(String),

    // ---- fermionic backend ----
    #[error("operator violates fermion-parity superselection (odd-sector weight {0:.3e})")]
    ParityViolation(f64),
    #[error("mode index {0} out of range for {1} modes")]
    ModeOutOfRange(usize, usize),
    #[error("definitional twirl limited to {1} traced modes, requested {0}")]
    TwirlTooLarge(usize, usize),

    // ---- Markov verification ----
    #[error(
        "numerical inconsistency: conditional mutual information {cmi:.3e} is below tolerance \
         but the modular commutator is {j:.3e}"
    )]
    ImplicationViolated { cmi: f64, j: f64 },

    // ---- Gaussian backend ----
    #[error("kernel is not antisymmetric (defect {0:.3e})")]
    NotAntisymmetric(f64),
    #[error("quadratic Hamiltonian is gapless (smallest pair value {0:.3e})")]
    GaplessKernel(f64),
    #[error("covariance is not a valid Majorana covariance: {0}")]
    InvalidCovariance(String),

    // ---- modular-current calculus ----
    #[error("commutator term could not be reduced: supports {0:?} and {1:?}")]
    UnreducedTerm(Vec<(i32, i32)>, Vec<(i32, i32)>),
    #[error("current conservation violated at site ({0}, {1}): residual {2}")]
    ConservationViolated(i32, i32, String),
    #[error("cut is too shallow: each side needs at least {0} boundary-adjacent sites")]
    CutTooShallow(usize),
    #[error("cut index {0} out of range for boundary ring of length {1}")]
    CutOutOfRange(usize, usize),

    // ---- models / io ----
    #[error("unknown model kind `{0}`")]
    UnknownModel(String),
    #[error("invalid model parameters: {0}")]
    InvalidModelParams(String),
    #[error("model parameters are gapless (bulk gap {0:.3e})")]
    GaplessParameters(f64),
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
