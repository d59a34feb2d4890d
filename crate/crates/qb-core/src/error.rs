use num_bigint::BigInt;
use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps these to exit codes: mathematical errors (hypothesis or
/// invariant violations) exit 1, precision/undecided conditions exit 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient must be nonzero")]
    ZeroCoefficient,

    #[error("trial division exhausted at bound {bound}: unfactored cofactor {cofactor}")]
    FactorBoundExceeded { bound: u64, cofactor: BigInt },

    #[error("division by zero")]
    DivisionByZero,

    #[error("division by a value indistinguishable from zero at the current precision")]
    DivisionByUncertifiedZero,

    #[error("precision exhausted: {0}")]
    PrecisionLoss(String),

    #[error(
        "Hensel criterion fails at the given seed: val(f(t)) = {fval:?}, val(f'(t)) = {dval:?}"
    )]
    HenselCriterionFailed {
        fval: Option<i64>,
        dval: Option<i64>,
    },

    #[error(
        "ambiguous root cluster at precision {precision}: {live} branches alive at depth {depth}"
    )]
    AmbiguousRoots {
        precision: i64,
        depth: i64,
        live: usize,
    },

    #[error("point does not satisfy the curve equation")]
    NotOnCurve,

    #[error("point does not satisfy the surface equation")]
    NotOnSurface,

    #[error("operation requires an affine point")]
    InfinitePoint,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("guard violated: {0}")]
    GuardViolated(String),

    #[error("no local normal form matched (condition holds and the surface is locally soluble); this is a bug")]
    NormalFormNotFound,

    #[error("surface has no Q_{p}-points")]
    LocallyInsoluble { p: u64 },

    #[error("undecided at search depth {1}: {0}")]
    Undecided(String, u64),

    #[error("odd Brauer class is trivial; nothing to evaluate")]
    TrivialClass,

    #[error("constraints unsatisfiable within the search budget")]
    ConstraintUnsatisfiable,

    #[error("deformed evaluations disagree across radii; local constancy could not be certified")]
    DeformationMismatch,

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("internal invariant failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for precision or search-depth failures, as opposed to
    /// mathematical (hypothesis/invariant) errors.
    pub fn is_precision(&self) -> bool {
        matches!(
            self,
            Error::PrecisionLoss(_)
                | Error::DivisionByUncertifiedZero
                | Error::AmbiguousRoots { .. }
                | Error::Undecided(_, _)
                | Error::HenselCriterionFailed { .. }
        )
    }
}
