//! The diagonal quartic surface a x^4 + b y^4 = c z^4 + d w^4, its maps to
//! the Kummer surface and to the pair of twisted curves E', E'', the
//! executable statement S_p, local normal-form reduction at ell in {3, 5},
//! and the local guard conditions behind the pairing criteria.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;

use crate::elliptic::{Base, CurveEm, DivisibilityTranscript, ECPoint};
use crate::error::{Error, Result};
use crate::padic::{sqrt_minus_one, PadicNumber};
use crate::poly::{hensel_root, PadicPolynomial};
use crate::rational::{
    in_neg4_coset_local, normalize_coefficients, rat, CoefficientQuadruple, Rational,
    Transformation, SIDE_SIGNS,
};
use crate::value::Value;

/// The surface given by exactly these integer coefficients (signs encoded in
/// the coefficients, sides fixed as a x^4 + b y^4 - c z^4 - d w^4 = 0).
/// Coefficients are not forced to be fourth-power-free here: the divisibility
/// corollaries quantify over integral points of the raw family equations.
/// [`DiagonalQuartic::normalized`] produces the reduced quadruple with its
/// transformation record.
#[derive(Debug, Clone)]
pub struct DiagonalQuartic {
    coeffs: [BigInt; 4],
}

impl DiagonalQuartic {
    pub fn new(coeffs: [BigInt; 4]) -> Result<Self> {
        if coeffs.iter().any(|c| c.is_zero()) {
            return Err(Error::ZeroCoefficient);
        }
        Ok(DiagonalQuartic { coeffs })
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::new([a, b, c, d].map(BigInt::from))
    }

    /// Normalize rational input coefficients first (fourth-power-free, gcd 1).
    pub fn from_rationals(a: &Rational, b: &Rational, c: &Rational, d: &Rational) -> Result<Self> {
        let q = normalize_coefficients(a, b, c, d)?;
        Self::new(q.coeffs())
    }

    pub fn coeffs(&self) -> &[BigInt; 4] {
        &self.coeffs
    }

    pub fn coeffs_i64(&self) -> Option<[i64; 4]> {
        let mut out = [0i64; 4];
        for (o, c) in out.iter_mut().zip(self.coeffs.iter()) {
            *o = i64::try_from(c).ok()?;
        }
        Some(out)
    }

    pub fn coeff_values(&self) -> [Value; 4] {
        std::array::from_fn(|i| Value::from_bigint(&self.coeffs[i]))
    }

    pub fn coeffs_rational(&self) -> [Rational; 4] {
        std::array::from_fn(|i| Rational::from_integer(self.coeffs[i].clone()))
    }

    pub fn normalized(&self) -> Result<CoefficientQuadruple> {
        let [a, b, c, d] = self.coeffs_rational();
        normalize_coefficients(&a, &b, &c, &d)
    }

    pub fn abcd(&self) -> Rational {
        Rational::from_integer(self.coeffs.iter().product())
    }

    /// a x^4 + b y^4 - c z^4 - d w^4.
    pub fn eval(&self, coords: &[Value; 4]) -> Value {
        let cs = self.coeff_values();
        let mut acc = Value::zero();
        for i in 0..4 {
            let term = cs[i].mul(&coords[i].pow4());
            acc = if SIDE_SIGNS[i] > 0 {
                acc.add(&term)
            } else {
                acc.sub(&term)
            };
        }
        acc
    }

    pub fn display_coeffs(&self) -> String {
        format!(
            "[{},{},{},{}]",
            self.coeffs[0], self.coeffs[1], self.coeffs[2], self.coeffs[3]
        )
    }
}

/// A point of D over Q or Q_p: primitive coordinates satisfying the surface
/// equation to certified precision.
#[derive(Debug, Clone)]
pub struct SurfacePoint {
    pub coords: [Value; 4],
}

impl SurfacePoint {
    pub fn new(d: &DiagonalQuartic, coords: [Value; 4]) -> Result<Self> {
        let all_zero = coords
            .iter()
            .try_fold(true, |acc, c| c.decide_zero().map(|z| acc && z));
        if matches!(all_zero, Ok(true)) {
            return Err(Error::NotOnSurface);
        }
        match d.eval(&coords).decide_zero() {
            Ok(true) => {}
            Ok(false) => return Err(Error::NotOnSurface),
            // vanishes at certified precision
            Err(_) => {}
        }
        Ok(SurfacePoint { coords })
    }

    pub fn from_integers(d: &DiagonalQuartic, coords: [i64; 4]) -> Result<Self> {
        let g = coords.iter().fold(0i64, |acc, &c| acc.gcd(&c));
        let coords = if g > 1 { coords.map(|c| c / g) } else { coords };
        Self::new(d, coords.map(Value::from_int))
    }

    /// Rescale projectively so that min val_p(coords) = 0.
    pub fn primitive_at(&self, p: u64) -> Result<SurfacePoint> {
        let mut min_val = i64::MAX;
        for c in &self.coords {
            match c.valuation(p) {
                Some(v) => min_val = min_val.min(v),
                None => {
                    if !matches!(c, Value::Exact(q) if q.is_zero())
                        && !matches!(c, Value::Padic(x) if x.is_exact_zero())
                    {
                        return Err(Error::PrecisionLoss(
                            "coordinate indistinguishable from zero while rescaling".into(),
                        ));
                    }
                }
            }
        }
        if min_val == i64::MAX {
            return Err(Error::NotOnSurface);
        }
        if min_val == 0 {
            return Ok(self.clone());
        }
        Ok(SurfacePoint {
            coords: std::array::from_fn(|i| self.coords[i].shift(p, -min_val)),
        })
    }

    pub fn display(&self) -> String {
        format!(
            "({}, {}, {}, {})",
            self.coords[0], self.coords[1], self.coords[2], self.coords[3]
        )
    }
}

/// f = a x^4 + b y^4 (= c z^4 + d w^4 on the surface).
pub fn f_value(d: &DiagonalQuartic, l: &SurfacePoint) -> Value {
    let cs = d.coeff_values();
    cs[0]
        .mul(&l.coords[0].pow4())
        .add(&cs[1].mul(&l.coords[1].pow4()))
}

/// The two twisted curves with their marked points:
/// m1 = 4ab f^2 with P = (-4ab x^2 y^2, 4ab x y (a x^4 - b y^4)), and the
/// mirror pair m2, Q from (c, d, z, w). P sits on Y^2 = X^3 - m1 X thanks to
/// (a x^4 + b y^4)^2 - 4ab x^4 y^4 = (a x^4 - b y^4)^2.
#[derive(Debug, Clone)]
pub struct TwistData {
    pub f: Value,
    pub coords: [Value; 4],
    pub m1: Value,
    pub point_p: ECPoint,
    pub m2: Value,
    pub point_q: ECPoint,
}

fn twist_half(a: &Value, b: &Value, s: &Value, t: &Value, f: &Value) -> (Value, ECPoint) {
    let four_ab = a.mul(b).mul(&Value::from_int(4));
    let m = four_ab.mul(&f.square());
    let x = four_ab.neg().mul(&s.square().mul(&t.square()));
    let y = four_ab
        .mul(&s.mul(t))
        .mul(&a.mul(&s.pow4()).sub(&b.mul(&t.pow4())));
    (m, ECPoint::affine(x, y))
}

pub fn twist_data(d: &DiagonalQuartic, l: &SurfacePoint) -> Result<TwistData> {
    let f = f_value(d, l);
    let mut product = f.clone();
    for c in &l.coords {
        product = product.mul(c);
    }
    match product.decide_zero() {
        Ok(false) => {}
        _ => {
            return Err(Error::HypothesisViolated(
                "xyzw*f vanishes (or cannot be certified nonzero); deform the point first".into(),
            ))
        }
    }
    let cs = d.coeff_values();
    let (m1, point_p) = twist_half(&cs[0], &cs[1], &l.coords[0], &l.coords[1], &f);
    let (m2, point_q) = twist_half(&cs[2], &cs[3], &l.coords[2], &l.coords[3], &f);
    // on-curve sanity; tolerate certified-to-precision residuals
    let _ = CurveEm::new(m1.clone(), Base::Q).and_then(|e| {
        let ECPoint::Affine { x, y } = &point_p else {
            unreachable!()
        };
        e.point(x.clone(), y.clone())
    })?;
    let _ = CurveEm::new(m2.clone(), Base::Q).and_then(|e| {
        let ECPoint::Affine { x, y } = &point_q else {
            unreachable!()
        };
        e.point(x.clone(), y.clone())
    })?;
    Ok(TwistData {
        f,
        coords: l.coords.clone(),
        m1,
        point_p,
        m2,
        point_q,
    })
}

/// Direct map D -> Kum: X = -4ab x^2 y^2 / f, T = -4cd z^2 w^2 / f,
/// Y = 16abcd xyzw (a x^4 - b y^4)(c z^4 - d w^4) / f^3.
pub fn kummer_image(d: &DiagonalQuartic, l: &SurfacePoint) -> Result<(Value, Value, Value)> {
    let f = f_value(d, l);
    if !f.is_certainly_nonzero() {
        return Err(Error::HypothesisViolated(
            "f = 0 on the Kummer map locus".into(),
        ));
    }
    let cs = d.coeff_values();
    let [x, y, z, w] = &l.coords;
    let four_ab = cs[0].mul(&cs[1]).mul(&Value::from_int(4));
    let four_cd = cs[2].mul(&cs[3]).mul(&Value::from_int(4));
    let big_x = four_ab.neg().mul(&x.square()).mul(&y.square()).div(&f)?;
    let big_t = four_cd.neg().mul(&z.square()).mul(&w.square()).div(&f)?;
    let lhs_diff = cs[0].mul(&x.pow4()).sub(&cs[1].mul(&y.pow4()));
    let rhs_diff = cs[2].mul(&z.pow4()).sub(&cs[3].mul(&w.pow4()));
    let xyzw = x.mul(y).mul(z).mul(w);
    let big_y = four_ab
        .mul(&four_cd)
        .mul(&xyzw)
        .mul(&lhs_diff)
        .mul(&rhs_diff)
        .div(&f.square().mul(&f))?;
    Ok((big_x, big_t, big_y))
}

/// Map E' x E'' -> Kum on the integral models: (X_P/f, X_Q/f, Y_P Y_Q/f^3);
/// applied to (P, Q) this reproduces [`kummer_image`] exactly.
pub fn product_to_kummer(td: &TwistData) -> Result<(Value, Value, Value)> {
    let (ECPoint::Affine { x: xp, y: yp }, ECPoint::Affine { x: xq, y: yq }) =
        (&td.point_p, &td.point_q)
    else {
        return Err(Error::InfinitePoint);
    };
    let f3 = td.f.square().mul(&td.f);
    Ok((xp.div(&td.f)?, xq.div(&td.f)?, yp.mul(yq).div(&f3)?))
}

/// The statement S_p(a, b : x, y): the point (-4ab x^2 y^2,
/// 4ab xy (a x^4 - b y^4)) is divisible by ell on Y^2 = X^3 - 4ab f^2 X
/// over Q_p, with f = a x^4 + b y^4.
pub fn s_test(
    a: &Value,
    b: &Value,
    x: &Value,
    y: &Value,
    p: u64,
    ell: u64,
    precision: u32,
) -> Result<bool> {
    s_test_with(a, b, x, y, p, ell, precision).map(|(v, _)| v)
}

pub fn s_test_with(
    a: &Value,
    b: &Value,
    x: &Value,
    y: &Value,
    p: u64,
    ell: u64,
    precision: u32,
) -> Result<(bool, DivisibilityTranscript)> {
    let f = a.mul(&x.pow4()).add(&b.mul(&y.pow4()));
    if !f.is_certainly_nonzero() {
        return Err(Error::HypothesisViolated(
            "S_p needs f = a x^4 + b y^4 nonzero".into(),
        ));
    }
    for v in [a, b, x, y] {
        if !v.is_certainly_nonzero() {
            return Err(Error::HypothesisViolated(
                "S_p needs nonzero a, b, x, y".into(),
            ));
        }
    }
    let (m, point) = twist_half(a, b, x, y, &f);
    crate::elliptic::is_divisible_by_ell_with(&m, &point, ell, p, precision)
}

// ---------------------------------------------------------------------------
// guard conditions
// ---------------------------------------------------------------------------

fn fourth_power_residue(r: u64, p: u64) -> bool {
    if r.is_multiple_of(p) {
        return false;
    }
    let e = (p - 1) / (p - 1).gcd(&4);
    let mut acc = 1u64;
    let mut base = r % p;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc == 1
}

/// v in <-4> Q_p^{*4} for a certified-nonzero value at an odd prime.
pub fn in_neg4_coset_value(v: &Value, p: u64) -> Result<bool> {
    let branch = |w: &Value| -> Result<bool> {
        let val = w
            .valuation(p)
            .ok_or_else(|| Error::PrecisionLoss("coset test on zero-ish value".into()))?;
        if val.rem_euclid(4) != 0 {
            return Ok(false);
        }
        let r = w
            .shift(p, -val)
            .residue_mod(p, 1)?
            .to_u64_digits()
            .first()
            .copied()
            .unwrap_or(0);
        Ok(fourth_power_residue(r, p))
    };
    if branch(v)? {
        return Ok(true);
    }
    branch(&v.div(&Value::from_int(-4))?)
}

/// m in (1 + 2i) Q_5^{*4} (plus = true) or (1 - 2i) Q_5^{*4} (plus = false),
/// where i is the square root of -1 with i ≡ 2 mod 5.
pub fn in_one_pm_2i_class(m: &Value, plus: bool, precision: u32) -> Result<bool> {
    let prec = precision.max(4);
    let i = sqrt_minus_one(5, prec)?;
    let two_i = i.add(&i);
    let one = PadicNumber::from_u64(5, 1, prec);
    let g = if plus {
        one.add(&two_i)
    } else {
        one.sub(&two_i)
    };
    let ratio = m.to_padic(5, prec).div(&g)?;
    let val = ratio
        .valuation()
        .ok_or_else(|| Error::PrecisionLoss("guard ratio indistinguishable from zero".into()))?;
    if val.rem_euclid(4) != 0 {
        return Ok(false);
    }
    let r = ratio
        .shift(-val)
        .residue(1)?
        .to_u64_digits()
        .first()
        .copied()
        .unwrap_or(0);
    // units of Z_5 are fourth powers exactly when ≡ 1 mod 5
    Ok(r == 1)
}

/// Guards for the ell = 5 pairing criterion: neither twist parameter may lie
/// in (1 ± 2i) Q_5^{*4}.
pub fn check_ell5_guards(m1: &Value, m2: &Value, precision: u32) -> Result<()> {
    for (name, m) in [("m1", m1), ("m2", m2)] {
        for plus in [true, false] {
            if in_one_pm_2i_class(m, plus, precision)? {
                return Err(Error::GuardViolated(format!(
                    "{name} lies in (1 {} 2i) Q_5^{{*4}}",
                    if plus { "+" } else { "-" }
                )));
            }
        }
    }
    Ok(())
}

/// Guard for the ell = 3 pairing criterion: -3 m1 m2 in <-4> Q_3^{*4}.
pub fn check_ell3_guard(m1: &Value, m2: &Value) -> Result<()> {
    let v = m1.mul(m2).mul(&Value::from_int(-3));
    if in_neg4_coset_value(&v, 3)? {
        Ok(())
    } else {
        Err(Error::GuardViolated(
            "-3 m1 m2 is not in <-4> Q_3^{*4}".into(),
        ))
    }
}

// ---------------------------------------------------------------------------
// local normal forms
// ---------------------------------------------------------------------------

/// The reduction targets at ell = 5 (n prime to 5) and ell = 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyId {
    A5 { n: u8 },
    B5 { n: u8 },
    C5,
    A3 { plus: bool },
    B3 { plus: bool },
    C3 { plus: bool },
}

impl FamilyId {
    pub fn label(&self) -> String {
        match self {
            FamilyId::A5 { n } => format!("A_{n} (ell=5)"),
            FamilyId::B5 { n } => format!("B_{n} (ell=5)"),
            FamilyId::C5 => "C (ell=5)".into(),
            FamilyId::A3 { plus } => format!("A (ell=3, {})", sign_str(*plus)),
            FamilyId::B3 { plus } => format!("B (ell=3, {})", sign_str(*plus)),
            FamilyId::C3 { plus } => format!("C (ell=3, {})", sign_str(*plus)),
        }
    }
}

fn sign_str(plus: bool) -> &'static str {
    if plus {
        "+"
    } else {
        "-"
    }
}

pub fn family_targets(ell: u64) -> Vec<(FamilyId, [i64; 4])> {
    let mut out = Vec::new();
    match ell {
        5 => {
            for n in 1..=4i64 {
                out.push((FamilyId::A5 { n: n as u8 }, [1, -1, n, -5 * n * n * n]));
            }
            for n in 1..=4i64 {
                out.push((
                    FamilyId::B5 { n: n as u8 },
                    [1, -1, 25 * n, -125 * n * n * n],
                ));
            }
            out.push((FamilyId::C5, [2, 2, 4, 5]));
        }
        3 => {
            for plus in [true, false] {
                let s = if plus { 1 } else { -1 };
                out.push((FamilyId::A3 { plus }, [1, 1, 1, 27 * s]));
                out.push((FamilyId::B3 { plus }, [1, -1, 3, 9 * s]));
                out.push((FamilyId::C3 { plus }, [1, 1, 2, 27 * s]));
            }
        }
        _ => panic!("only ell = 3 and ell = 5 have normal forms"),
    }
    out
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            if b == a {
                continue;
            }
            for c in 0..4 {
                if c == a || c == b {
                    continue;
                }
                let d = 6 - a - b - c;
                out.push([a, b, c, d]);
            }
        }
    }
    out
}

/// Fourth root of an exact rational in Q_p, assuming membership in
/// Q_p^{*4}: exact valuation split plus a Hensel lift on the unit part.
///
/// At p = 2 the derivative 4t^3 has valuation 2, so seeds come from the odd
/// residues mod 2^5 and Newton is run with padded working precision to
/// absorb the two digits lost per step.
pub fn fourth_root_in_qp(q: &Rational, p: u64, precision: u32) -> Result<PadicNumber> {
    let val = crate::rational::valuation(q, p).ok_or(Error::ZeroCoefficient)?;
    if val.rem_euclid(4) != 0 {
        return Err(Error::HypothesisViolated(format!(
            "val_{p}({q}) = {val} not divisible by 4"
        )));
    }
    let unit = {
        let pw = Rational::from_integer(BigInt::from(p).pow(val.unsigned_abs() as u32));
        if val >= 0 {
            q / pw
        } else {
            q * pw
        }
    };
    let (seed_modulus, seed_digits, pad) = if p == 2 {
        (32u64, 5u32, 32u32)
    } else {
        (p, 1, 4)
    };
    let r = crate::rational::residue_mod(&unit, p, seed_digits)?;
    let seed = (1..seed_modulus)
        .filter(|t| t % p != 0)
        .find(|&t| {
            let t = num_bigint::BigUint::from(t);
            t.pow(4) % seed_modulus == r
        })
        .ok_or_else(|| {
            Error::HypothesisViolated(format!("{q} has no fourth root in Q_{p} (unit part)"))
        })?;
    let work = precision + pad;
    let poly = PadicPolynomial::from_rationals(p, &[-unit, rat(0), rat(0), rat(0), rat(1)], work)?;
    let root = hensel_root(&poly, &PadicNumber::from_u64(p, seed, work), precision)?;
    Ok(root.truncate(precision).shift(val / 4))
}

/// What a successful normal-form reduction produces.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub ell: u64,
    pub family: FamilyId,
    pub surface: DiagonalQuartic,
    pub record: Transformation<Value>,
}

impl Transformation<Value> {
    /// Coordinates of the image point on the normal form.
    pub fn apply_to_point(&self, coords: &[Value; 4]) -> Result<[Value; 4]> {
        let mut out = std::array::from_fn(|_| Value::zero());
        for i in 0..4 {
            out[i] = coords[self.perm[i]].div(&self.lambda[i])?;
        }
        Ok(out)
    }

    /// Coordinates of the preimage on the original surface.
    pub fn pull_back_point(&self, coords: &[Value; 4]) -> [Value; 4] {
        let mut out = std::array::from_fn(|_| Value::zero());
        for i in 0..4 {
            out[self.perm[i]] = coords[i].mul(&self.lambda[i]);
        }
        out
    }

    pub fn apply_to_coeff_values(&self, coeffs: &[Value; 4]) -> [Value; 4] {
        std::array::from_fn(|i| {
            let j = self.perm[i];
            let sign = Value::from_int(SIDE_SIGNS[i] * SIDE_SIGNS[j]);
            sign.mul(&coeffs[j])
                .mul(&self.mu)
                .mul(&self.lambda[i].pow4())
        })
    }
}

/// Reduce D to one of the normal-form families over Q_ell by a variable
/// permutation, fourth-power scalings and a common constant.
///
/// The matching is an exact coset computation: a permuted quadruple a'
/// matches target t iff the three ratios (t_i / a'_i) / (t_0 / a'_0) lie in
/// Q_ell^{*4}, and then mu = t_0/a'_0 with lambda_i the fourth roots of the
/// ratios. The lemma this implements guarantees a match whenever the
/// classifier condition holds at ell and D(Q_ell) is nonempty, so an
/// exhausted search distinguishes those two failure causes.
pub fn local_normal_form(d: &DiagonalQuartic, ell: u64, precision: u32) -> Result<NormalForm> {
    let abcd = d.abcd();
    let condition = match ell {
        3 => in_neg4_coset_local(&(rat(-3) * &abcd), 3, precision)?,
        5 => in_neg4_coset_local(&(rat(125) * &abcd), 5, precision)?,
        _ => return Err(Error::HypothesisViolated("ell must be 3 or 5".into())),
    };
    if !condition {
        return Err(Error::HypothesisViolated(format!(
            "the order-{ell} classifier condition fails locally at {ell}"
        )));
    }
    let coeffs = d.coeffs_rational();
    for perm in permutations4() {
        let permuted: [Rational; 4] = std::array::from_fn(|i| {
            let j = perm[i];
            rat(SIDE_SIGNS[i] * SIDE_SIGNS[j]) * &coeffs[j]
        });
        'target: for (family, target) in family_targets(ell) {
            let t: [Rational; 4] = target.map(rat);
            let mu = &t[0] / &permuted[0];
            let mut lambda = [
                Value::from_int(1),
                Value::zero(),
                Value::zero(),
                Value::zero(),
            ];
            for i in 1..4 {
                let ratio = (&t[i] / &permuted[i]) / &mu;
                if !crate::rational::local_fourth_power_class(&ratio, ell)? {
                    continue 'target;
                }
                // a rational fourth root keeps the whole record exact, which
                // downstream precision budgets depend on
                lambda[i] = match crate::rational::rational_fourth_root(&ratio) {
                    Some(r) => Value::Exact(r),
                    None => Value::Padic(fourth_root_in_qp(
                        &ratio,
                        ell,
                        precision + 2 * crate::PRECISION_MARGIN,
                    )?),
                };
            }
            let record = Transformation {
                perm,
                lambda,
                mu: Value::Exact(mu),
            };
            let surface = DiagonalQuartic::new(target.map(BigInt::from))?;
            // the record must reproduce the integer target to precision
            let image = record.apply_to_coeff_values(&d.coeff_values());
            for (im, tv) in image.iter().zip(surface.coeff_values().iter()) {
                let diff = im.sub(tv);
                if diff.is_certainly_nonzero() {
                    return Err(Error::Internal(
                        "normal-form record fails to reproduce target".into(),
                    ));
                }
            }
            return Ok(NormalForm {
                ell,
                family,
                surface,
                record,
            });
        }
    }
    if crate::search::is_locally_soluble(d, ell, precision)? {
        Err(Error::NormalFormNotFound)
    } else {
        Err(Error::LocallyInsoluble { p: ell })
    }
}
