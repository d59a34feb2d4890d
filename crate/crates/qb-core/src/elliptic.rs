//! The curve family E^m : y^2 = x^3 - m x over Q and Q_p.
//!
//! Everything the evaluation engine needs lives here: the chord-tangent
//! group law (exact whenever the inputs are exact rationals), minimal-model
//! reduction data, the Neron filtration by x-coordinate valuation, and the
//! structural decision procedure for divisibility of a point by ell in
//! E^m(Q_p). The family admits only good or additive reduction, and the
//! component group order divides 4, which is what makes the filtration
//! argument decide ell-divisibility for odd ell.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Q,
    Qp { p: u64, precision: u32 },
}

/// y^2 = x^3 - m x with m nonzero; the discriminant 64 m^3 is then
/// automatically nonzero.
#[derive(Debug, Clone)]
pub struct CurveEm {
    pub m: Value,
    pub base: Base,
}

#[derive(Debug, Clone)]
pub enum ECPoint {
    Infinity,
    Affine { x: Value, y: Value },
}

impl ECPoint {
    pub fn affine(x: Value, y: Value) -> Self {
        ECPoint::Affine { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ECPoint::Infinity)
    }

    pub fn x(&self) -> Option<&Value> {
        match self {
            ECPoint::Affine { x, .. } => Some(x),
            ECPoint::Infinity => None,
        }
    }

    pub fn y(&self) -> Option<&Value> {
        match self {
            ECPoint::Affine { y, .. } => Some(y),
            ECPoint::Infinity => None,
        }
    }

    pub fn neg(&self) -> Self {
        match self {
            ECPoint::Infinity => ECPoint::Infinity,
            ECPoint::Affine { x, y } => ECPoint::Affine {
                x: x.clone(),
                y: y.neg(),
            },
        }
    }
}

impl CurveEm {
    pub fn new(m: Value, base: Base) -> Result<Self> {
        if m.decide_zero()? {
            return Err(Error::ZeroCoefficient);
        }
        Ok(CurveEm { m, base })
    }

    pub fn rhs(&self, x: &Value) -> Value {
        x.square().mul(x).sub(&self.m.mul(x))
    }

    /// Validate and wrap an affine point.
    pub fn point(&self, x: Value, y: Value) -> Result<ECPoint> {
        let residual = y.square().sub(&self.rhs(&x));
        match residual.decide_zero() {
            Ok(true) => Ok(ECPoint::Affine { x, y }),
            Ok(false) => Err(Error::NotOnCurve),
            // vanishes to certified precision: accept
            Err(_) => Ok(ECPoint::Affine { x, y }),
        }
    }

    pub fn point_i64(&self, x: i64, y: i64) -> Result<ECPoint> {
        self.point(Value::from_int(x), Value::from_int(y))
    }

    /// Chord-tangent addition.
    pub fn point_add(&self, r1: &ECPoint, r2: &ECPoint) -> Result<ECPoint> {
        let (x1, y1, x2, y2) = match (r1, r2) {
            (ECPoint::Infinity, _) => return Ok(r2.clone()),
            (_, ECPoint::Infinity) => return Ok(r1.clone()),
            (ECPoint::Affine { x: x1, y: y1 }, ECPoint::Affine { x: x2, y: y2 }) => {
                (x1, y1, x2, y2)
            }
        };
        if x1.sub(x2).decide_zero()? {
            if y1.add(y2).decide_zero()? {
                return Ok(ECPoint::Infinity);
            }
            return self.point_double(r1);
        }
        let lambda = y2.sub(y1).div(&x2.sub(x1))?;
        Ok(self.chord_result(&lambda, x1, y1, x2))
    }

    pub fn point_double(&self, r: &ECPoint) -> Result<ECPoint> {
        let (x, y) = match r {
            ECPoint::Infinity => return Ok(ECPoint::Infinity),
            ECPoint::Affine { x, y } => (x, y),
        };
        if y.decide_zero()? {
            return Ok(ECPoint::Infinity);
        }
        let num = x.square().mul(&Value::from_int(3)).sub(&self.m);
        let lambda = num.div(&y.add(y))?;
        Ok(self.chord_result(&lambda, x, y, x))
    }

    fn chord_result(&self, lambda: &Value, x1: &Value, y1: &Value, x2: &Value) -> ECPoint {
        let x3 = lambda.square().sub(x1).sub(x2);
        let y3 = lambda.mul(&x1.sub(&x3)).sub(y1);
        ECPoint::Affine { x: x3, y: y3 }
    }

    /// n R by double-and-add; doubling is dispatched explicitly so equal
    /// operands never reach the ambiguous chord case.
    pub fn scalar_mul(&self, n: i64, r: &ECPoint) -> Result<ECPoint> {
        if n == 0 {
            return Ok(ECPoint::Infinity);
        }
        let (n, base) = if n < 0 { (-n, r.neg()) } else { (n, r.clone()) };
        let mut acc = ECPoint::Infinity;
        for i in (0..64 - n.leading_zeros()).rev() {
            acc = self.point_double(&acc)?;
            if (n >> i) & 1 == 1 {
                acc = self.point_add(&acc, &base)?;
            }
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReductionKind {
    Good,
    Additive,
}

/// Minimal-model reduction data of E^m at an odd prime p.
#[derive(Debug, Clone)]
pub struct ReductionProfile {
    pub p: u64,
    /// k with m = p^{4k} m0 and 0 <= val_p(m0) <= 3.
    pub scaling_exponent: i64,
    pub minimal_m: Value,
    pub kind: ReductionKind,
    /// Number of F_p-points of the reduced curve (smooth locus only in the
    /// additive case), point at infinity included.
    pub smooth_count: u64,
    /// Order of E(Q_p)/E_0(Q_p); always 1, 2 or 4 in this family.
    pub component_order: u8,
    /// p = 5 with m0 ≡ 15 mod 25: the one case where E_0 is not
    /// topologically Z_p, excluded from the structural divisibility path.
    pub exceptional: bool,
}

impl ReductionProfile {
    /// The same data viewed on the minimal model itself.
    pub fn on_minimal_model(&self) -> ReductionProfile {
        ReductionProfile {
            scaling_exponent: 0,
            ..self.clone()
        }
    }
}

fn legendre(a: u64, p: u64) -> i64 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    let mut r = 1u64;
    let mut base = a;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

/// Reduction analysis of y^2 = x^3 - m x at an odd prime.
pub fn reduction_profile(m: &Value, p: u64, _precision: u32) -> Result<ReductionProfile> {
    if p == 2 {
        return Err(Error::HypothesisViolated(
            "reduction profile needs an odd prime".into(),
        ));
    }
    let vm = m
        .valuation(p)
        .ok_or_else(|| Error::PrecisionLoss("m indistinguishable from zero".into()))?;
    let k = vm.div_euclid(4);
    let v0 = vm - 4 * k;
    let minimal_m = m.shift(p, -4 * k);
    let kind = if v0 == 0 {
        ReductionKind::Good
    } else {
        ReductionKind::Additive
    };

    let m_bar = minimal_m
        .residue_mod(p, 1)?
        .to_u64_digits()
        .first()
        .copied()
        .unwrap_or(0);
    let mut count = 1u64; // point at infinity
    for x in 0..p {
        let t = ((x * x % p) * x % p + p - m_bar * x % p) % p;
        if kind == ReductionKind::Additive && x == 0 {
            continue; // the cusp (0,0); no other affine point has t = 0 here
        }
        match legendre(t, p) {
            0 => count += 1,
            1 => count += 2,
            _ => {}
        }
    }

    let component_order = match v0 {
        0 => 1,
        1 | 3 => 2, // Kodaira III and III*
        2 => {
            // I0*: 2 or 4 components depending on whether T(T^2 - m0/p^2)
            // splits over F_p
            let u = minimal_m
                .shift(p, -2)
                .residue_mod(p, 1)?
                .to_u64_digits()
                .first()
                .copied()
                .unwrap_or(0);
            if legendre(u, p) == 1 {
                4
            } else {
                2
            }
        }
        _ => unreachable!(),
    };

    let exceptional = p == 5 && v0 == 1 && {
        let u = minimal_m
            .shift(p, -1)
            .residue_mod(p, 1)?
            .to_u64_digits()
            .first()
            .copied()
            .unwrap_or(0);
        u % 5 == 3 // m0 = 5u with u ≡ 3, i.e. m0 ≡ 15 mod 25
    };

    Ok(ReductionProfile {
        p,
        scaling_exponent: k,
        minimal_m,
        kind,
        smooth_count: count,
        component_order,
        exceptional,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FiltrationLevel {
    /// Reduces to the singular point of an additive fibre.
    NotInE0,
    /// Largest n with val_p(x) <= -2n on the minimal model (0 if none).
    Level(u32),
}

impl FiltrationLevel {
    pub fn at_least(&self, n: u32) -> bool {
        match self {
            FiltrationLevel::NotInE0 => false,
            FiltrationLevel::Level(k) => *k >= n,
        }
    }
}

/// Whether val_p of the value is certified to be >= k.
fn val_at_least(v: &Value, p: u64, k: i64) -> Result<bool> {
    match v {
        Value::Exact(q) => Ok(crate::rational::valuation(q, p).is_none_or(|w| w >= k)),
        Value::Padic(x) => {
            if let Some(w) = x.valuation() {
                Ok(w >= k)
            } else if x.is_exact_zero() || x.abs_precision().unwrap() >= k {
                Ok(true)
            } else {
                Err(Error::PrecisionLoss(format!(
                    "valuation of {x} not certified to {k}"
                )))
            }
        }
    }
}

/// Filtration level of an affine point of E^m(Q_p); the point is rescaled
/// to the minimal model internally.
pub fn filtration_level(profile: &ReductionProfile, r: &ECPoint) -> Result<FiltrationLevel> {
    let (x, y) = match r {
        ECPoint::Infinity => return Err(Error::InfinitePoint),
        ECPoint::Affine { x, y } => (x, y),
    };
    let p = profile.p;
    let k = profile.scaling_exponent;
    let xm = x.shift(p, -2 * k);
    let ym = y.shift(p, -3 * k);
    let vx = match xm.valuation(p) {
        Some(v) => v,
        None => {
            if xm.is_certainly_nonzero() {
                return Err(Error::Internal(
                    "unreachable: nonzero without valuation".into(),
                ));
            }
            // x = 0 (the 2-torsion point (0,0)); on an additive fibre that
            // is the singular point
            if matches!(xm, Value::Exact(_)) || matches!(&xm, Value::Padic(z) if z.is_exact_zero())
            {
                return Ok(match profile.kind {
                    ReductionKind::Additive => FiltrationLevel::NotInE0,
                    ReductionKind::Good => FiltrationLevel::Level(0),
                });
            }
            return Err(Error::PrecisionLoss(
                "x-coordinate indistinguishable from zero".into(),
            ));
        }
    };
    if vx < 0 {
        if vx % 2 != 0 {
            return Err(Error::Internal(format!("odd negative valuation {vx} of x")));
        }
        return Ok(FiltrationLevel::Level((-vx / 2) as u32));
    }
    if profile.kind == ReductionKind::Additive && vx >= 1 && val_at_least(&ym, p, 1)? {
        return Ok(FiltrationLevel::NotInE0);
    }
    Ok(FiltrationLevel::Level(0))
}

/// Diagnostic record of how a divisibility decision was reached.
#[derive(Debug, Clone, Serialize)]
pub struct DivisibilityTranscript {
    pub p: u64,
    pub ell: u64,
    pub rule: String,
    pub minimal_m_valuation: Option<i64>,
    pub kind: Option<ReductionKind>,
    pub smooth_count: Option<u64>,
    pub multiple_computed: Option<u64>,
    pub filtration_of_multiple: Option<FiltrationLevel>,
    pub divisible: bool,
}

impl DivisibilityTranscript {
    fn bare(p: u64, ell: u64, rule: &str, divisible: bool) -> Self {
        DivisibilityTranscript {
            p,
            ell,
            rule: rule.into(),
            minimal_m_valuation: None,
            kind: None,
            smooth_count: None,
            multiple_computed: None,
            filtration_of_multiple: None,
            divisible,
        }
    }
}

/// Structural decision for R ∈ ell·E^m(Q_p), ell in {3, 5}.
///
/// - p = 2: always divisible (the group is divisible by every odd prime).
/// - p = ell, good reduction with ell prime to the point count n of the
///   reduced curve: nR lands in E_1, where multiplication by ell is the
///   shift E_1 -> E_2 of the filtration; R is divisible iff nR = 0 or nR
///   lies in E_2.
/// - p = ell, additive non-exceptional: 4R lands in E_0 ≅ Z_p, where
///   multiplication by ell is the shift E_0 -> E_1; R is divisible iff
///   4R = 0 or 4R lies in E_1.
/// - p ≠ ell: E(Q_p)/ell has order equal to the number of Q_p-rational
///   ell-torsion points; with no such torsion everything is divisible.
///
/// The remaining corners (ell | n, the exceptional additive case at p = 5,
/// rational ell-torsion present) fall back to the division-polynomial
/// oracle.
pub fn is_divisible_by_ell(
    m: &Value,
    r: &ECPoint,
    ell: u64,
    p: u64,
    precision: u32,
) -> Result<bool> {
    is_divisible_by_ell_with(m, r, ell, p, precision).map(|(b, _)| b)
}

pub fn is_divisible_by_ell_with(
    m: &Value,
    r: &ECPoint,
    ell: u64,
    p: u64,
    precision: u32,
) -> Result<(bool, DivisibilityTranscript)> {
    if ell != 3 && ell != 5 {
        return Err(Error::HypothesisViolated(format!(
            "ell = {ell}; only 3 and 5 are supported"
        )));
    }
    if p == 2 {
        return Ok((
            true,
            DivisibilityTranscript::bare(p, ell, "p=2: E(Q_2) is odd-divisible", true),
        ));
    }
    if r.is_infinity() {
        return Ok((
            true,
            DivisibilityTranscript::bare(p, ell, "point at infinity", true),
        ));
    }
    let profile = reduction_profile(m, p, precision)?;
    let k = profile.scaling_exponent;
    let minimal = profile.on_minimal_model();
    let curve = CurveEm::new(minimal.minimal_m.clone(), Base::Qp { p, precision })?;
    let r_min = match r {
        ECPoint::Affine { x, y } => ECPoint::Affine {
            x: x.shift(p, -2 * k),
            y: y.shift(p, -3 * k),
        },
        ECPoint::Infinity => unreachable!(),
    };
    let mut transcript = DivisibilityTranscript::bare(p, ell, "", false);
    transcript.minimal_m_valuation = minimal.minimal_m.valuation(p);
    transcript.kind = Some(minimal.kind);
    transcript.smooth_count = Some(minimal.smooth_count);

    if p == ell {
        match minimal.kind {
            ReductionKind::Good => {
                if minimal.smooth_count % ell == 0 {
                    let v = crate::division::is_divisible_oracle(m, r, ell, p, precision)?;
                    transcript.rule = format!(
                        "oracle fallback: ell | #E~(F_{p}) = {}",
                        minimal.smooth_count
                    );
                    transcript.divisible = v;
                    return Ok((v, transcript));
                }
                let n = minimal.smooth_count;
                let rr = curve.scalar_mul(n as i64, &r_min)?;
                transcript.rule = "good reduction at p = ell: nR against E_2".into();
                transcript.multiple_computed = Some(n);
                let div = if rr.is_infinity() {
                    true
                } else {
                    let lvl = filtration_level(&minimal, &rr)?;
                    transcript.filtration_of_multiple = Some(lvl);
                    lvl.at_least(2)
                };
                transcript.divisible = div;
                Ok((div, transcript))
            }
            ReductionKind::Additive => {
                if minimal.exceptional {
                    let v = crate::division::is_divisible_oracle(m, r, ell, p, precision)?;
                    transcript.rule =
                        "oracle fallback: exceptional additive case m0 ≡ 15 mod 25".into();
                    transcript.divisible = v;
                    return Ok((v, transcript));
                }
                let rr = curve.scalar_mul(4, &r_min)?;
                transcript.rule = "additive reduction at p = ell: 4R against E_1".into();
                transcript.multiple_computed = Some(4);
                let div = if rr.is_infinity() {
                    true
                } else {
                    let lvl = filtration_level(&minimal, &rr)?;
                    transcript.filtration_of_multiple = Some(lvl);
                    if lvl == FiltrationLevel::NotInE0 {
                        return Err(Error::Internal(
                            "4R escaped E_0; component order exceeds 4?".into(),
                        ));
                    }
                    lvl.at_least(1)
                };
                transcript.divisible = div;
                Ok((div, transcript))
            }
        }
    } else {
        if !has_rational_ell_torsion(&minimal.minimal_m, ell, p, precision)? {
            transcript.rule = "p ≠ ell and no Q_p-rational ell-torsion: E(Q_p)/ell = 0".into();
            transcript.divisible = true;
            return Ok((true, transcript));
        }
        let v = crate::division::is_divisible_oracle(m, r, ell, p, precision)?;
        transcript.rule = "oracle fallback: Q_p-rational ell-torsion present".into();
        transcript.divisible = v;
        Ok((v, transcript))
    }
}

/// Does E^m(Q_p) contain a point of exact order ell? Detected by finding
/// Q_p-roots of the ell-division polynomial whose y^2-value is a square.
pub fn has_rational_ell_torsion(m: &Value, ell: u64, p: u64, precision: u32) -> Result<bool> {
    let psi = crate::division::division_polynomials(ell, m).psi;
    let poly = crate::poly::PadicPolynomial::new(
        p,
        psi.iter().map(|c| c.to_padic(p, precision)).collect(),
    )?;
    let roots = crate::poly::padic_poly_roots(&poly)?;
    for root in roots {
        let x = Value::Padic(root);
        let rhs = x.square().mul(&x).sub(&m.mul(&x));
        if square_in_qp(&rhs, p)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Is v a square in Q_p (p odd)? Needs a certified-nonzero v.
pub fn square_in_qp(v: &Value, p: u64) -> Result<bool> {
    let val = v
        .valuation(p)
        .ok_or_else(|| Error::PrecisionLoss("square test on a zero-ish value".into()))?;
    if val % 2 != 0 {
        return Ok(false);
    }
    let unit = v.shift(p, -val);
    let r = unit
        .residue_mod(p, 1)?
        .to_u64_digits()
        .first()
        .copied()
        .unwrap_or(0);
    Ok(legendre(r, p) == 1)
}

/// A square root of v in Q_p (p odd) when one exists.
pub fn sqrt_in_qp(v: &Value, p: u64, precision: u32) -> Result<Option<crate::padic::PadicNumber>> {
    if !square_in_qp(v, p)? {
        return Ok(None);
    }
    let val = v.valuation(p).unwrap();
    let unit = v.shift(p, -val);
    let r = unit
        .residue_mod(p, 1)?
        .to_u64_digits()
        .first()
        .copied()
        .unwrap_or(0);
    let seed = (1..p)
        .find(|t| t * t % p == r)
        .expect("quadratic residue has a root");
    let poly = crate::poly::PadicPolynomial::new(
        p,
        vec![
            unit.to_padic(p, precision).neg(),
            crate::padic::PadicNumber::exact_zero(p),
            crate::padic::PadicNumber::from_u64(p, 1, precision),
        ],
    )?;
    let root = crate::poly::hensel_root(
        &poly,
        &crate::padic::PadicNumber::from_u64(p, seed, precision),
        precision.saturating_sub(crate::PRECISION_MARGIN),
    )?;
    Ok(Some(root.shift(val / 2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PadicNumber;
    use crate::rational::{rat, rat_frac, valuation};

    fn q_curve(m: i64) -> CurveEm {
        CurveEm::new(Value::from_int(m), Base::Q).unwrap()
    }

    #[test]
    fn chord_anchors_on_m_1156() {
        let e = q_curve(1156);
        let p = e.point_i64(-16, -120).unwrap();
        let m_plus = e.point_i64(34, 0).unwrap();
        let m_minus = e.point_i64(-34, 0).unwrap();

        let s = e.point_add(&p, &m_plus).unwrap();
        let x = s.x().unwrap().as_exact().unwrap().clone();
        assert_eq!(x, rat_frac(-306, 25));
        assert_eq!(valuation(&x, 5), Some(-2));

        let s = e.point_add(&p, &m_minus).unwrap();
        let x = s.x().unwrap().as_exact().unwrap().clone();
        assert_eq!(x, rat_frac(850, 9));
        assert_eq!(valuation(&x, 3), Some(-2));
    }

    #[test]
    fn infinity_is_neutral() {
        let e = q_curve(1156);
        let p = e.point_i64(-16, -120).unwrap();
        let s = e.point_add(&p, &ECPoint::Infinity).unwrap();
        assert_eq!(s.x().unwrap().as_exact(), p.x().unwrap().as_exact());
    }

    #[test]
    fn two_torsion_anchors() {
        // (0,0) is 2-torsion on every E^m, and 5(0,0) = (0,0)
        let e = q_curve(77);
        let t = e.point_i64(0, 0).unwrap();
        assert!(e.scalar_mul(2, &t).unwrap().is_infinity());
        let five = e.scalar_mul(5, &t).unwrap();
        assert!(five.x().unwrap().as_exact().unwrap().numer().bits() == 0);
    }

    #[test]
    fn group_axioms_on_anchored_curve() {
        // inverse, commutativity, associativity on small combinations
        let e = q_curve(1156);
        let p = e.point_i64(-16, -120).unwrap();
        assert!(e.point_add(&p, &p.neg()).unwrap().is_infinity());
        for (a, b, c) in [(1i64, 2i64, 3i64), (2, -1, 4), (-2, 3, -1), (5, 1, -3)] {
            let pa = e.scalar_mul(a, &p).unwrap();
            let pb = e.scalar_mul(b, &p).unwrap();
            let pc = e.scalar_mul(c, &p).unwrap();
            let lhs = e.point_add(&e.point_add(&pa, &pb).unwrap(), &pc).unwrap();
            let rhs = e.point_add(&pa, &e.point_add(&pb, &pc).unwrap()).unwrap();
            match (&lhs, &rhs) {
                (ECPoint::Infinity, ECPoint::Infinity) => {}
                (ECPoint::Affine { x: x1, y: y1 }, ECPoint::Affine { x: x2, y: y2 }) => {
                    assert_eq!(x1.as_exact(), x2.as_exact());
                    assert_eq!(y1.as_exact(), y2.as_exact());
                }
                _ => panic!("associativity failed"),
            }
            // commutativity
            let ab = e.point_add(&pa, &pb).unwrap();
            let ba = e.point_add(&pb, &pa).unwrap();
            match (&ab, &ba) {
                (ECPoint::Infinity, ECPoint::Infinity) => {}
                (ECPoint::Affine { x: x1, .. }, ECPoint::Affine { x: x2, .. }) => {
                    assert_eq!(x1.as_exact(), x2.as_exact());
                }
                _ => panic!("commutativity failed"),
            }
            // on-curve closure
            if let ECPoint::Affine { x, y } = &lhs {
                assert!(y.square().sub(&e.rhs(x)).decide_zero().unwrap());
            }
        }
    }

    #[test]
    fn scalar_mul_matches_repeated_addition() {
        let e = q_curve(1156);
        let p = e.point_i64(-16, -120).unwrap();
        let mut acc = ECPoint::Infinity;
        for n in 1..=20i64 {
            acc = e.point_add(&acc, &p).unwrap();
            let direct = e.scalar_mul(n, &p).unwrap();
            match (&acc, &direct) {
                (ECPoint::Infinity, ECPoint::Infinity) => {}
                (ECPoint::Affine { x: x1, .. }, ECPoint::Affine { x: x2, .. }) => {
                    assert_eq!(x1.as_exact(), x2.as_exact(), "n = {n}");
                }
                _ => panic!("mismatch at n = {n}"),
            }
        }
    }

    #[test]
    fn reduction_count_anchors() {
        // known counts: 8 points at p=5 for m=18496, 4 points at p=3 for m=1156
        let pr = reduction_profile(&Value::from_int(18496), 5, 32).unwrap();
        assert_eq!(pr.kind, ReductionKind::Good);
        assert_eq!(pr.smooth_count, 8);
        assert_eq!(pr.component_order, 1);

        let pr = reduction_profile(&Value::from_int(1156), 3, 32).unwrap();
        assert_eq!(pr.kind, ReductionKind::Good);
        assert_eq!(pr.smooth_count, 4);

        let pr = reduction_profile(&Value::from_int(5), 5, 32).unwrap();
        assert_eq!(pr.kind, ReductionKind::Additive);
        assert!(!pr.exceptional);
        assert_eq!(pr.component_order, 2);

        // additive: smooth count equals p (E_0/E_1 is the additive group)
        for (m, p) in [(5i64, 5u64), (50, 5), (3, 3), (63, 3), (7, 7), (169, 13)] {
            let pr = reduction_profile(&Value::from_int(m), p, 32).unwrap();
            if pr.kind == ReductionKind::Additive {
                assert_eq!(pr.smooth_count, p, "m={m}, p={p}");
            }
        }
    }

    #[test]
    fn exceptional_flag_per_congruence() {
        for m in [15i64, 40, 65, 15 + 25 * 7] {
            assert!(
                reduction_profile(&Value::from_int(m), 5, 32)
                    .unwrap()
                    .exceptional,
                "m={m}"
            );
        }
        for m in [5i64, 10, 20, 25, 75, 375] {
            assert!(
                !reduction_profile(&Value::from_int(m), 5, 32)
                    .unwrap()
                    .exceptional,
                "m={m}"
            );
        }
    }

    #[test]
    fn minimal_model_rescaling() {
        // m = 5^4 * 2: k = 1, minimal valuation 0
        let pr = reduction_profile(&Value::from_int(1250), 5, 32).unwrap();
        assert_eq!(pr.scaling_exponent, 1);
        assert_eq!(pr.minimal_m.valuation(5), Some(0));
        assert_eq!(pr.kind, ReductionKind::Good);
        // m = 1/5: k = -1, minimal valuation 3
        let pr = reduction_profile(&Value::Exact(rat_frac(1, 5)), 5, 32).unwrap();
        assert_eq!(pr.scaling_exponent, -1);
        assert_eq!(pr.minimal_m.valuation(5), Some(3));
        assert_eq!(pr.kind, ReductionKind::Additive);
    }

    #[test]
    fn filtration_anchors() {
        // unit x-coordinate, good reduction: level 0
        let pr = reduction_profile(&Value::from_int(16), 5, 32).unwrap();
        let e = q_curve(16);
        let r = e.point_i64(-4, 0).unwrap();
        assert_eq!(
            filtration_level(&pr, &r).unwrap(),
            FiltrationLevel::Level(0)
        );

        // x = -306/25 over Q_5: level 1
        let pr = reduction_profile(&Value::from_int(1156), 5, 32).unwrap();
        let e = q_curve(1156);
        let p = e.point_i64(-16, -120).unwrap();
        let m = e.point_i64(34, 0).unwrap();
        let s = e.point_add(&p, &m).unwrap();
        assert_eq!(
            filtration_level(&pr, &s).unwrap(),
            FiltrationLevel::Level(1)
        );

        // additive curve, point reducing to the singular point
        let pr = reduction_profile(&Value::from_int(20), 5, 32).unwrap();
        let e = q_curve(20);
        let r = e.point_i64(5, 5).unwrap();
        assert_eq!(filtration_level(&pr, &r).unwrap(), FiltrationLevel::NotInE0);

        assert!(matches!(
            filtration_level(&pr, &ECPoint::Infinity),
            Err(Error::InfinitePoint)
        ));
    }

    #[test]
    fn filtration_monotone_under_mul_by_p() {
        // formal group: level(p R) = level(R) + 1 for R in E_1
        let e = q_curve(1156);
        let p = e.point_i64(-16, -120).unwrap();
        let m = e.point_i64(34, 0).unwrap();
        let s = e.point_add(&p, &m).unwrap(); // level 1 at p=5
        let pr = reduction_profile(&Value::from_int(1156), 5, 32).unwrap();
        let lvl1 = filtration_level(&pr, &s).unwrap();
        let s5 = e.scalar_mul(5, &s).unwrap();
        let lvl5 = filtration_level(&pr, &s5).unwrap();
        match (lvl1, lvl5) {
            (FiltrationLevel::Level(a), FiltrationLevel::Level(b)) => assert!(b > a),
            _ => panic!("unexpected filtration"),
        }
    }

    #[test]
    fn anchored_non_divisibility_at_5() {
        // P = (-64, -960) is not divisible by 5 on y^2 = x^3 - 18496 x over Q_5
        let r = q_curve(18496).point_i64(-64, -960).unwrap();
        let (div, tr) = is_divisible_by_ell_with(&Value::from_int(18496), &r, 5, 5, 32).unwrap();
        assert!(!div);
        assert_eq!(tr.multiple_computed, Some(8));
    }

    #[test]
    fn divisible_at_2_and_at_infinity() {
        let r = q_curve(18496).point_i64(-64, -960).unwrap();
        assert!(is_divisible_by_ell(&Value::from_int(18496), &r, 5, 2, 32).unwrap());
        assert!(
            is_divisible_by_ell(&Value::from_int(18496), &ECPoint::Infinity, 5, 5, 32).unwrap()
        );
    }

    #[test]
    fn constructed_multiples_are_divisible() {
        let e = q_curve(1156);
        let s = e.point_i64(-16, -120).unwrap();
        for ell in [3i64, 5] {
            let r = e.scalar_mul(ell, &s).unwrap();
            for p in [3u64, 5, 7, 13] {
                assert!(
                    is_divisible_by_ell(&Value::from_int(1156), &r, ell as u64, p, 32).unwrap(),
                    "ell={ell}, p={p}"
                );
            }
        }
    }

    #[test]
    fn eight_p_lands_in_filtration() {
        // 8 * (-64, -960) on y^2 = x^3 - 18496x over Q_5 has filtration
        // level >= 1: its image in the F_5-point group of order 8 dies
        let prec = 32;
        let base = Base::Qp {
            p: 5,
            precision: prec,
        };
        let e = CurveEm::new(Value::from_int(18496), base).unwrap();
        let x = Value::Padic(PadicNumber::from_i64(5, -64, prec));
        let y = Value::Padic(PadicNumber::from_i64(5, -960, prec));
        let r = e.point(x, y).unwrap();
        let r8 = e.scalar_mul(8, &r).unwrap();
        let pr = reduction_profile(&Value::from_int(18496), 5, prec).unwrap();
        assert!(filtration_level(&pr, &r8).unwrap().at_least(1));
    }

    #[test]
    fn square_detection() {
        assert!(square_in_qp(&Value::from_int(9), 5).unwrap());
        assert!(!square_in_qp(&Value::from_int(10), 5).unwrap());
        assert!(!square_in_qp(&Value::from_int(2), 5).unwrap());
        assert!(square_in_qp(&Value::Exact(rat(-1)), 5).unwrap());
        assert!(!square_in_qp(&Value::Exact(rat(-1)), 3).unwrap());
    }
}
