//! Point search and solubility: exhaustive primitive integral points in a
//! box, verification of the integral divisibility corollaries, Hensel-based
//! local solubility, and constrained sampling of smooth Q_p-points.
//!
//! The box search is data-parallel over x-slices. With the `parallel`
//! feature (default) the slices run on rayon; [`integral_points_serial`] is
//! always available and produces the identical, deterministically ordered
//! point set.

use std::collections::HashSet;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quartic::{fourth_root_in_qp, DiagonalQuartic, SurfacePoint};
use crate::rational::{in_neg4_coset_global, rat, Rational, SIDE_SIGNS};
use crate::value::Value;

fn coeffs_i128(d: &DiagonalQuartic) -> Result<[i128; 4]> {
    let mut out = [0i128; 4];
    for (o, c) in out.iter_mut().zip(d.coeffs().iter()) {
        *o = c
            .to_i128()
            .ok_or_else(|| Error::Malformed("coefficients too large for box search".into()))?;
    }
    Ok(out)
}

fn integer_fourth_root(q: i128) -> Option<i128> {
    if q < 0 {
        return None;
    }
    if q == 0 {
        return Some(0);
    }
    let mut r = (q as f64).powf(0.25).round() as i128;
    while r > 0 && r * r * r * r > q {
        r -= 1;
    }
    while (r + 1) * (r + 1) * (r + 1) * (r + 1) <= q {
        r += 1;
    }
    if r * r * r * r == q {
        Some(r)
    } else {
        None
    }
}

fn gcd4(v: &[i64; 4]) -> i64 {
    v.iter()
        .fold(0i64, |acc, &c| num_integer::gcd(acc, c.abs()))
}

/// Nonnegative primitive representatives in one x-slice, solving for the
/// last coordinate.
fn scan_slice(coeffs: &[i128; 4], x: i64, bound: i64) -> Vec<[i64; 4]> {
    let [a, b, c, d] = *coeffs;
    let mut out = Vec::new();
    let x4 = (x as i128).pow(4);
    for y in 0..=bound {
        let y4 = (y as i128).pow(4);
        for z in 0..=bound {
            let z4 = (z as i128).pow(4);
            let rhs = a * x4 + b * y4 - c * z4;
            if rhs % d != 0 {
                continue;
            }
            let Some(w) = integer_fourth_root(rhs / d) else {
                continue;
            };
            if w > bound as i128 {
                continue;
            }
            let tuple = [x, y, z, w as i64];
            if gcd4(&tuple) == 1 {
                out.push(tuple);
            }
        }
    }
    out
}

fn expand_signs(reps: Vec<[i64; 4]>) -> Vec<[i64; 4]> {
    let mut set = HashSet::new();
    for rep in reps {
        for mask in 0..16u32 {
            let mut t = rep;
            let mut ok = true;
            for (i, v) in t.iter_mut().enumerate() {
                if mask & (1 << i) != 0 {
                    if *v == 0 {
                        ok = false;
                        break;
                    }
                    *v = -*v;
                }
            }
            if ok {
                set.insert(t);
            }
        }
    }
    let mut out: Vec<[i64; 4]> = set.into_iter().collect();
    out.sort();
    out
}

/// All primitive integral points of D with every |coordinate| <= bound,
/// closed under per-coordinate sign flips, deterministically ordered.
pub fn integral_points(d: &DiagonalQuartic, bound: i64) -> Result<Vec<[i64; 4]>> {
    #[cfg(feature = "parallel")]
    {
        integral_points_parallel(d, bound)
    }
    #[cfg(not(feature = "parallel"))]
    {
        integral_points_serial(d, bound)
    }
}

fn check_search_range(coeffs: &[i128; 4], bound: i64) -> Result<()> {
    let b4 = (bound as i128)
        .checked_pow(4)
        .ok_or_else(|| Error::Malformed("bound too large for the box search".into()))?;
    for c in coeffs {
        if c.checked_mul(b4).and_then(|t| t.checked_mul(4)).is_none() {
            return Err(Error::Malformed(
                "coefficients too large for the box search".into(),
            ));
        }
    }
    Ok(())
}

pub fn integral_points_serial(d: &DiagonalQuartic, bound: i64) -> Result<Vec<[i64; 4]>> {
    let coeffs = coeffs_i128(d)?;
    check_search_range(&coeffs, bound)?;
    let reps: Vec<[i64; 4]> = (0..=bound)
        .flat_map(|x| scan_slice(&coeffs, x, bound))
        .collect();
    Ok(expand_signs(reps))
}

#[cfg(feature = "parallel")]
pub fn integral_points_parallel(d: &DiagonalQuartic, bound: i64) -> Result<Vec<[i64; 4]>> {
    let coeffs = coeffs_i128(d)?;
    check_search_range(&coeffs, bound)?;
    let reps: Vec<[i64; 4]> = (0..=bound)
        .into_par_iter()
        .map(|x| scan_slice(&coeffs, x, bound))
        .reduce(Vec::new, |mut acc, mut v| {
            acc.append(&mut v);
            acc
        });
    Ok(expand_signs(reps))
}

// ---------------------------------------------------------------------------
// divisibility corollaries
// ---------------------------------------------------------------------------

/// The four corollary families:
/// - co1.1: x^4 - y^4 = n z^4 - 5 n^3 (-4)^eps w^4, 5 coprime to n, 25 | xyzw
/// - co1.2: x^4 - y^4 = 25 n z^4 - 125 n^3 (-4)^eps w^4, 5 | zw
/// - co3.1: x^4 + n y^4 = z^4 - 27 n^3 (-4)^eps w^4, n ≡ 1 mod 3, 9 | xyw
/// - co3.2: x^4 - y^4 = 3 n z^4 + 9 n^3 (-4)^eps w^4, 3 coprime to n, 3 | zw
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CorollaryFamily {
    Co51,
    Co52,
    Co31,
    Co32,
}

impl CorollaryFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "co1.1" => Ok(CorollaryFamily::Co51),
            "co1.2" => Ok(CorollaryFamily::Co52),
            "co3.1" => Ok(CorollaryFamily::Co31),
            "co3.2" => Ok(CorollaryFamily::Co32),
            _ => Err(Error::Malformed(format!(
                "unknown family {s}; expected co1.1, co1.2, co3.1 or co3.2"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CorollaryFamily::Co51 => "co1.1",
            CorollaryFamily::Co52 => "co1.2",
            CorollaryFamily::Co31 => "co3.1",
            CorollaryFamily::Co32 => "co3.2",
        }
    }

    pub fn condition_label(&self) -> &'static str {
        match self {
            CorollaryFamily::Co51 => "25 | xyzw",
            CorollaryFamily::Co52 => "5 | zw",
            CorollaryFamily::Co31 => "9 | xyw",
            CorollaryFamily::Co32 => "3 | zw",
        }
    }

    fn condition_holds(&self, pt: &[i64; 4]) -> bool {
        let [x, y, z, w] = pt.map(i128::from);
        match self {
            CorollaryFamily::Co51 => (x * y * z * w) % 25 == 0,
            CorollaryFamily::Co52 => (z * w) % 5 == 0,
            CorollaryFamily::Co31 => (x * y * w) % 9 == 0,
            CorollaryFamily::Co32 => (z * w) % 3 == 0,
        }
    }
}

/// Build the family surface and re-verify the corollary hypotheses it is
/// supposed to satisfy (coefficient valuations, congruences, and the global
/// coset condition).
pub fn corollary_surface(family: CorollaryFamily, n: i64, epsilon: u8) -> Result<DiagonalQuartic> {
    if epsilon > 1 {
        return Err(Error::Malformed("epsilon must be 0 or 1".into()));
    }
    if n == 0 {
        return Err(Error::HypothesisViolated("n must be nonzero".into()));
    }
    let sign4 = if epsilon == 1 { -4i64 } else { 1 };
    let (coeffs, ell) = match family {
        CorollaryFamily::Co51 => {
            if n % 5 == 0 {
                return Err(Error::HypothesisViolated(
                    "co1.1 needs n coprime to 5".into(),
                ));
            }
            ([1, -1, n, -5 * n.pow(3) * sign4], 5u64)
        }
        CorollaryFamily::Co52 => {
            if n % 5 == 0 {
                return Err(Error::HypothesisViolated(
                    "co1.2 needs n coprime to 5".into(),
                ));
            }
            ([1, -1, 25 * n, -125 * n.pow(3) * sign4], 5)
        }
        CorollaryFamily::Co31 => {
            if n.rem_euclid(3) != 1 {
                return Err(Error::HypothesisViolated("co3.1 needs n ≡ 1 mod 3".into()));
            }
            ([1, n, 1, -27 * n.pow(3) * sign4], 3)
        }
        CorollaryFamily::Co32 => {
            if n % 3 == 0 {
                return Err(Error::HypothesisViolated(
                    "co3.2 needs n coprime to 3".into(),
                ));
            }
            ([1, -1, 3 * n, 9 * n.pow(3) * sign4], 3)
        }
    };
    let d = DiagonalQuartic::new(coeffs.map(num_bigint::BigInt::from))?;
    // re-verify the coefficient valuations and congruences the divisibility
    // conclusion rests on
    let [a, b, c, dd] = coeffs;
    let hypotheses_hold = match family {
        CorollaryFamily::Co51 => a % 5 != 0 && b % 5 != 0 && c % 5 != 0 && (a + b) % 5 == 0,
        CorollaryFamily::Co52 => a % 5 != 0 && b % 5 != 0 && c % 5 == 0 && dd % 5 == 0,
        CorollaryFamily::Co31 => {
            a % 3 != 0 && (a - b).rem_euclid(3) == 0 && (a - c).rem_euclid(3) == 0
        }
        CorollaryFamily::Co32 => a % 3 != 0 && b % 3 != 0 && c % 3 == 0 && dd % 3 == 0,
    };
    if !hypotheses_hold {
        return Err(Error::HypothesisViolated(format!(
            "family {} coefficient congruences fail for n = {n}, epsilon = {epsilon}",
            family.label()
        )));
    }
    let class_value = match ell {
        5 => rat(125) * d.abcd(),
        _ => rat(-3) * d.abcd(),
    };
    if !in_neg4_coset_global(&class_value) {
        return Err(Error::HypothesisViolated(format!(
            "family coefficients fail the order-{ell} coset condition"
        )));
    }
    Ok(d)
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub family: String,
    pub n: i64,
    pub epsilon: u8,
    pub bound: i64,
    pub condition: String,
    pub points_found: usize,
    pub points: Vec<[i64; 4]>,
    pub violations: Vec<[i64; 4]>,
}

/// Exhaustively search the family surface in the box and check every point
/// against the divisibility conclusion. A nonempty violation list would
/// contradict the theorem, so callers treat it as a build-stopping signal.
pub fn verify_corollary(
    family: CorollaryFamily,
    n: i64,
    epsilon: u8,
    bound: i64,
) -> Result<SearchReport> {
    if bound < 1 {
        return Err(Error::Malformed("bound must be >= 1".into()));
    }
    let d = corollary_surface(family, n, epsilon)?;
    let points = integral_points(&d, bound)?;
    let violations: Vec<[i64; 4]> = points
        .iter()
        .filter(|pt| !family.condition_holds(pt))
        .copied()
        .collect();
    Ok(SearchReport {
        family: family.label().into(),
        n,
        epsilon,
        bound,
        condition: family.condition_label().into(),
        points_found: points.len(),
        points,
        violations,
    })
}

// ---------------------------------------------------------------------------
// local solubility
// ---------------------------------------------------------------------------

fn eval_mod(coeffs: &[i128; 4], t: &[u64; 4], modulus: u64) -> u64 {
    let m = modulus as i128;
    let mut acc = 0i128;
    for i in 0..4 {
        let ti = t[i] as i128 % m;
        let t4 = ti * ti % m * ti % m * ti % m;
        let term = coeffs[i].rem_euclid(m) * t4 % m * SIDE_SIGNS[i] as i128;
        acc = (acc + term).rem_euclid(m);
    }
    acc as u64
}

fn val_u64(mut n: u64, p: u64) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let mut v = 0;
    while n.is_multiple_of(p) {
        v += 1;
        n /= p;
    }
    v
}

const SOLUBILITY_SURVIVOR_CAP: usize = 200_000;

/// Decide D(Q_p) ≠ ∅ by a bounded residue search with a smooth-point Hensel
/// certificate: a solution mod p^k with some partial derivative 4 a_i t_i^3
/// of valuation v and k >= 2v + 1 lifts to Z_p. Survivor sets are tracked up
/// to unit scaling. If the depth bound is reached with live survivors but no
/// certificate, "undecided" is reported rather than guessed.
pub fn is_locally_soluble(d: &DiagonalQuartic, p: u64, _precision: u32) -> Result<bool> {
    if p > 100 {
        return Err(Error::Malformed(
            "residue enumeration for local solubility supports p <= 100".into(),
        ));
    }
    // fourth-power-free coefficients keep the forced-valuation cascade
    // shallow, and the coordinate scalings do not change solubility
    let norm = d.normalized()?;
    let d = &DiagonalQuartic::new(norm.coeffs())?;
    let coeffs = coeffs_i128(d)?;
    // depth bound 2 val_p(4 max|a_i|) + 3: deep enough for the derivative
    // 4 a_i t_i^3 of a unit coordinate to certify a lift
    let vmax = val_u64(4, p)
        + coeffs
            .iter()
            .map(|c| crate::padic::bigint_valuation(&num_bigint::BigInt::from(*c), p) as u32)
            .max()
            .unwrap();
    let depth_bound = 2 * vmax + 3;

    // level 1: all primitive residue tuples mod p
    let mut survivors: Vec<[u64; 4]> = Vec::new();
    let mut seen = HashSet::new();
    for x in 0..p {
        for y in 0..p {
            for z in 0..p {
                for w in 0..p {
                    let t = [x, y, z, w];
                    if t.iter().all(|&c| c == 0) {
                        continue;
                    }
                    if eval_mod(&coeffs, &t, p) == 0 && seen.insert(canonical_scaled(&t, p, 1)) {
                        survivors.push(t);
                    }
                }
            }
        }
    }

    for k in 1..=depth_bound {
        let modulus = p.pow(k);
        // certificate pass
        for t in &survivors {
            for (i, &ti) in t.iter().enumerate() {
                if ti % modulus == 0 {
                    continue; // valuation of the derivative not certified
                }
                let v = val_u64(4, p)
                    + 3 * val_u64(ti, p)
                    + crate::padic::bigint_valuation(&d.coeffs()[i], p) as u32;
                if k > 2 * v {
                    return Ok(true);
                }
            }
        }
        if k == depth_bound {
            break;
        }
        // extend to level k+1
        let next_modulus = p.pow(k + 1);
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        for t in &survivors {
            for dx in 0..p {
                for dy in 0..p {
                    for dz in 0..p {
                        for dw in 0..p {
                            let cand = [
                                t[0] + dx * modulus,
                                t[1] + dy * modulus,
                                t[2] + dz * modulus,
                                t[3] + dw * modulus,
                            ];
                            if cand.iter().all(|&c| c % p == 0) {
                                continue; // not primitive
                            }
                            if eval_mod(&coeffs, &cand, next_modulus) == 0
                                && seen.insert(canonical_scaled(&cand, p, k + 1))
                            {
                                next.push(cand);
                            }
                        }
                    }
                }
            }
            if next.len() > SOLUBILITY_SURVIVOR_CAP {
                return Err(Error::Undecided(
                    "survivor set exceeded the cap before certification".into(),
                    k as u64,
                ));
            }
        }
        survivors = next;
        if survivors.is_empty() {
            return Ok(false);
        }
    }
    if survivors.is_empty() {
        Ok(false)
    } else {
        Err(Error::Undecided(
            format!(
                "{} primitive residue classes survive without a smooth certificate",
                survivors.len()
            ),
            depth_bound as u64,
        ))
    }
}

/// Canonical representative of a residue tuple under unit scaling mod p^k.
fn canonical_scaled(t: &[u64; 4], p: u64, k: u32) -> [u64; 4] {
    let modulus = p.pow(k);
    let Some(pivot) = t.iter().find(|&&c| c % p != 0) else {
        return *t;
    };
    let inv = mod_inverse_u64(*pivot % modulus, modulus);
    let mut out = [0u64; 4];
    for (o, &c) in out.iter_mut().zip(t.iter()) {
        *o = (c as u128 * inv as u128 % modulus as u128) as u64;
    }
    out
}

fn mod_inverse_u64(a: u64, m: u64) -> u64 {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    t.rem_euclid(m as i128) as u64
}

// ---------------------------------------------------------------------------
// smooth point sampling
// ---------------------------------------------------------------------------

/// Side constraints for [`find_smooth_point`].
#[derive(Debug, Clone)]
pub enum Constraint {
    /// val_p(coordinate i) is exactly v.
    ValEq(usize, u32),
    /// p divides none of the listed coordinates.
    UnitProduct(Vec<usize>),
}

/// A point of D(Q_p) with xyzw * f certifiably nonzero and the given
/// constraints satisfied: three coordinates are drawn as exact integers and
/// the fourth is solved by a quartic Hensel lift.
pub fn find_smooth_point(
    d: &DiagonalQuartic,
    p: u64,
    precision: u32,
    constraints: &[Constraint],
    seed: u64,
) -> Result<SurfacePoint> {
    Ok(
        sample_smooth_points_constrained(d, p, precision, 1, constraints, seed)?
            .pop()
            .expect("count = 1"),
    )
}

pub fn sample_smooth_points(
    d: &DiagonalQuartic,
    p: u64,
    precision: u32,
    count: usize,
    seed: u64,
) -> Result<Vec<SurfacePoint>> {
    sample_smooth_points_constrained(d, p, precision, count, &[], seed)
}

pub fn sample_smooth_points_constrained(
    d: &DiagonalQuartic,
    p: u64,
    precision: u32,
    count: usize,
    constraints: &[Constraint],
    seed: u64,
) -> Result<Vec<SurfacePoint>> {
    for c in constraints {
        if let Constraint::ValEq(i, v) = c {
            if *i > 3 {
                return Err(Error::Malformed("constraint index out of range".into()));
            }
            if 4 * v + 8 > precision {
                return Err(Error::ConstraintUnsatisfiable);
            }
        }
    }
    if !is_locally_soluble(d, p, precision)? {
        return Err(Error::LocallyInsoluble { p });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut out = Vec::new();
    let budget = 6000 * count.max(1);
    let fixed_val = |i: usize| -> Option<u32> {
        constraints.iter().find_map(|c| match c {
            Constraint::ValEq(j, v) if *j == i => Some(*v),
            _ => None,
        })
    };
    let must_be_unit = |i: usize| -> bool {
        constraints
            .iter()
            .any(|c| matches!(c, Constraint::UnitProduct(v) if v.contains(&i)))
    };
    for _ in 0..budget {
        if out.len() >= count {
            break;
        }
        // choose which coordinate to solve for: unconstrained slots first
        let solve = (0..4)
            .filter(|&i| fixed_val(i).is_none())
            .max_by_key(|_| rng.gen_range(0..1000))
            .ok_or(Error::ConstraintUnsatisfiable)?;
        let mut coords_exact: [Rational; 4] = std::array::from_fn(|_| rat(0));
        for (i, slot) in coords_exact.iter_mut().enumerate() {
            if i == solve {
                continue;
            }
            let v = fixed_val(i).unwrap_or_else(|| {
                if must_be_unit(i) || rng.gen_bool(0.7) {
                    0
                } else {
                    rng.gen_range(1..3)
                }
            });
            let unit = loop {
                let u = rng.gen_range(1..(4 * p).max(5)) as i64;
                if is_p_unit(u, p) {
                    break u;
                }
            };
            *slot = rat(unit) * rat(p as i64).pow(v as i32);
        }
        // a_solve * t^4 = eps_solve * (-(sum of the other signed terms))
        let cs = d.coeffs_rational();
        let mut rhs = rat(0);
        for i in 0..4 {
            if i == solve {
                continue;
            }
            rhs += rat(SIDE_SIGNS[i]) * &cs[i] * coords_exact[i].pow(4);
        }
        let target = rat(-SIDE_SIGNS[solve]) * rhs / &cs[solve];
        if target.numer().bits() == 0 {
            continue;
        }
        let Ok(root) = fourth_root_in_qp(&target, p, precision) else {
            continue;
        };
        if must_be_unit(solve) && root.valuation() != Some(0) {
            continue;
        }
        if let Some(v) = fixed_val(solve) {
            if root.valuation() != Some(v as i64) {
                continue;
            }
        }
        let mut coords: [Value; 4] = std::array::from_fn(|i| Value::Exact(coords_exact[i].clone()));
        coords[solve] = Value::Padic(root);
        let Ok(point) = SurfacePoint::new(d, coords) else {
            continue;
        };
        let Ok(point) = point.primitive_at(p) else {
            continue;
        };
        // revalidate: on surface (checked), coordinates nonzero, f nonzero
        let f = crate::quartic::f_value(d, &point);
        let mut product = f;
        for c in &point.coords {
            product = product.mul(c);
        }
        if !product.is_certainly_nonzero() {
            continue;
        }
        let ok = constraints.iter().all(|c| match c {
            Constraint::ValEq(i, v) => point.coords[*i].valuation(p) == Some(*v as i64),
            Constraint::UnitProduct(idx) => {
                idx.iter().all(|&i| point.coords[i].valuation(p) == Some(0))
            }
        });
        if !ok {
            continue;
        }
        out.push(point);
    }
    if out.len() < count {
        return Err(Error::ConstraintUnsatisfiable);
    }
    Ok(out)
}

fn is_p_unit(u: i64, p: u64) -> bool {
    !u.unsigned_abs().is_multiple_of(p)
}
