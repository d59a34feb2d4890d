//! Decides the odd-order Brauer group of diagonal quartic surfaces
//! `a x^4 + b y^4 = c z^4 + d w^4` over Q, evaluates the resulting
//! Brauer-Manin obstruction at p-adic points through elliptic-curve
//! divisibility tests, and verifies the associated integral divisibility
//! statements by exhaustive search.
//!
//! Module map:
//! - [`rational`]: exact rationals, factorization, fourth-power coset tests,
//!   coefficient normalization.
//! - [`padic`]: finite-precision Q_p arithmetic with explicit precision
//!   tracking, and the 5-adic square root of -1.
//! - [`poly`]: p-adic polynomials, Hensel lifting, root finding.
//! - [`value`]: a field element that is either an exact rational or a
//!   p-adic approximation; arithmetic stays exact as long as inputs are.
//! - [`elliptic`]: the curve family y^2 = x^3 - m x, its group law,
//!   reduction analysis, Neron filtration, and the structural
//!   ell-divisibility decision.
//! - [`division`]: division polynomials and the independent root-finding
//!   divisibility oracle.
//! - [`quartic`]: the surface model, the maps to the Kummer surface and the
//!   twisted curves, local normal forms, and the S_p test.
//! - [`brauer`]: the odd-order classifier, the evaluation map with
//!   certificates, witness orbits.
//! - [`search`]: integral point search, local solubility, smooth point
//!   sampling, divisibility corollary verification.
//! - [`selftest`]: the acceptance suite shared by `cargo test` and the CLI.

pub mod brauer;
pub mod division;
pub mod elliptic;
pub mod error;
pub mod padic;
pub mod poly;
pub mod quartic;
pub mod rational;
pub mod search;
pub mod selftest;
pub mod value;

pub use error::{Error, Result};

/// Default working precision in p-adic digits.
pub const DEFAULT_PRECISION: u32 = 32;

/// Valuation comparisons must hold with at least this many digits to spare.
pub const PRECISION_MARGIN: u32 = 4;

/// Run `f` at precision `n`; on a precision failure retry once at `2n`.
pub fn with_escalation<T>(n: u32, f: impl Fn(u32) -> Result<T>) -> Result<T> {
    match f(n) {
        Err(e) if e.is_precision() => f(2 * n),
        other => other,
    }
}
