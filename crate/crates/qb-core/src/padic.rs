//! Finite-precision elements of Q_p.
//!
//! A nonzero element is stored as `p^val * unit + O(p^(val + digits))` with
//! `unit` a unit modulo `p^digits`. Arithmetic propagates the minimum
//! justified precision; subtraction of nearly equal values shrinks the
//! certified digit count accordingly. A value that cancels below its
//! certified precision degrades to an explicit "zero to absolute precision
//! k" state, which downstream consumers must either tolerate or reject —
//! there is no silent promotion of an approximate zero to an exact one.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{modular_inverse, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    /// The exact zero element (valuation +infinity).
    ExactZero,
    /// Known only to be divisible by p^abs: O(p^abs).
    ZeroTo { abs: i64 },
    /// p^val * unit + O(p^(val + digits)), 0 < unit < p^digits, p does not
    /// divide unit.
    Unit {
        val: i64,
        unit: BigUint,
        digits: u32,
    },
}

/// An element of Q_p carried at finite precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicNumber {
    p: u64,
    repr: Repr,
}

impl PadicNumber {
    pub fn exact_zero(p: u64) -> Self {
        PadicNumber {
            p,
            repr: Repr::ExactZero,
        }
    }

    pub fn zero_to(p: u64, abs: i64) -> Self {
        PadicNumber {
            p,
            repr: Repr::ZeroTo { abs },
        }
    }

    /// Build from raw parts; `unit` is reduced mod p^digits and the pair
    /// (val, unit) renormalized so the stored unit is prime to p.
    pub fn from_parts(p: u64, val: i64, unit: BigUint, digits: u32) -> Self {
        let modulus = BigUint::from(p).pow(digits);
        let u = unit % &modulus;
        if u.is_zero() {
            return PadicNumber {
                p,
                repr: Repr::ZeroTo {
                    abs: val + digits as i64,
                },
            };
        }
        let shift = uint_valuation(&u, p);
        if shift == 0 {
            return PadicNumber {
                p,
                repr: Repr::Unit {
                    val,
                    unit: u,
                    digits,
                },
            };
        }
        let u2 = u / BigUint::from(p).pow(shift);
        let d2 = digits - shift;
        PadicNumber {
            p,
            repr: Repr::Unit {
                val: val + shift as i64,
                unit: u2,
                digits: d2,
            },
        }
    }

    pub fn from_bigint(p: u64, n: &BigInt, digits: u32) -> Self {
        if n.is_zero() {
            return Self::exact_zero(p);
        }
        let v = bigint_valuation(n, p);
        let reduced = n.magnitude() / BigUint::from(p).pow(v as u32);
        let modulus = BigUint::from(p).pow(digits);
        let mut unit = reduced % &modulus;
        if n.is_negative() {
            unit = (&modulus - unit) % &modulus;
        }
        Self::from_parts(p, v, unit, digits)
    }

    pub fn from_u64(p: u64, n: u64, digits: u32) -> Self {
        Self::from_bigint(p, &BigInt::from(n), digits)
    }

    pub fn from_i64(p: u64, n: i64, digits: u32) -> Self {
        Self::from_bigint(p, &BigInt::from(n), digits)
    }

    pub fn from_rational(p: u64, q: &Rational, digits: u32) -> Self {
        if q.is_zero() {
            return Self::exact_zero(p);
        }
        let vn = bigint_valuation(q.numer(), p);
        let vd = bigint_valuation(q.denom(), p);
        let modulus = BigUint::from(p).pow(digits);
        let num = q.numer().magnitude() / BigUint::from(p).pow(vn as u32) % &modulus;
        let den = q.denom().magnitude() / BigUint::from(p).pow(vd as u32) % &modulus;
        let inv = modular_inverse(&den, &modulus).expect("reduced denominator is a unit");
        let mut unit = num * inv % &modulus;
        if q.is_negative() {
            unit = (&modulus - unit) % &modulus;
        }
        Self::from_parts(p, vn - vd, unit, digits)
    }

    /// Build from an exact rational so that the absolute precision is at
    /// least `abs_target`, with a few digits to spare.
    pub fn from_rational_abs(p: u64, q: &Rational, abs_target: i64) -> Self {
        if q.is_zero() {
            return Self::exact_zero(p);
        }
        let v = crate::rational::valuation(q, p).unwrap();
        let digits =
            (abs_target - v).max(crate::PRECISION_MARGIN as i64) as u32 + crate::PRECISION_MARGIN;
        Self::from_rational(p, q, digits)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Exact valuation for certified-nonzero values; `None` when the value
    /// is zero or indistinguishable from zero.
    pub fn valuation(&self) -> Option<i64> {
        match &self.repr {
            Repr::Unit { val, .. } => Some(*val),
            _ => None,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::ExactZero)
    }

    /// True for both the exact zero and a value that vanishes to its
    /// certified precision.
    pub fn is_zero_at_precision(&self) -> bool {
        !matches!(self.repr, Repr::Unit { .. })
    }

    /// Absolute precision: the value is known modulo p^abs. `None` means the
    /// value is exact (the exact zero).
    pub fn abs_precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::ExactZero => None,
            Repr::ZeroTo { abs } => Some(*abs),
            Repr::Unit { val, digits, .. } => Some(val + *digits as i64),
        }
    }

    /// Number of certified significant digits (0 for zero-ish values).
    pub fn digits(&self) -> u32 {
        match &self.repr {
            Repr::Unit { digits, .. } => *digits,
            _ => 0,
        }
    }

    pub fn unit_part(&self) -> Option<&BigUint> {
        match &self.repr {
            Repr::Unit { unit, .. } => Some(unit),
            _ => None,
        }
    }

    /// Fails unless the value carries at least `n` certified digits.
    pub fn require_digits(&self, n: u32) -> Result<()> {
        match &self.repr {
            Repr::Unit { digits, .. } if *digits >= n => Ok(()),
            Repr::ExactZero => Ok(()),
            _ => Err(Error::PrecisionLoss(format!(
                "needed {n} certified digits, have {} ({self})",
                self.digits()
            ))),
        }
    }

    /// Residue modulo p^k for values of nonnegative valuation known at least
    /// to absolute precision k.
    pub fn residue(&self, k: u32) -> Result<BigUint> {
        let modulus = BigUint::from(self.p).pow(k);
        match &self.repr {
            Repr::ExactZero => Ok(BigUint::zero()),
            Repr::ZeroTo { abs } => {
                if *abs >= k as i64 {
                    Ok(BigUint::zero())
                } else {
                    Err(Error::PrecisionLoss(format!("residue mod p^{k} of {self}")))
                }
            }
            Repr::Unit { val, unit, digits } => {
                if *val < 0 {
                    return Err(Error::Internal(
                        "residue of a value with negative valuation".into(),
                    ));
                }
                if val + (*digits as i64) < k as i64 {
                    return Err(Error::PrecisionLoss(format!("residue mod p^{k} of {self}")));
                }
                Ok(BigUint::from(self.p).pow(*val as u32) * unit % modulus)
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p, "mixed primes");
        let p = self.p;
        match (&self.repr, &other.repr) {
            (Repr::ExactZero, _) => other.clone(),
            (_, Repr::ExactZero) => self.clone(),
            (Repr::ZeroTo { abs: a }, Repr::ZeroTo { abs: b }) => Self::zero_to(p, *a.min(b)),
            (Repr::ZeroTo { abs }, Repr::Unit { val, unit, digits })
            | (Repr::Unit { val, unit, digits }, Repr::ZeroTo { abs }) => {
                let m = (*abs).min(val + *digits as i64);
                if *val >= m {
                    Self::zero_to(p, m)
                } else {
                    Self::from_parts(p, *val, unit.clone(), (m - val) as u32)
                }
            }
            (
                Repr::Unit {
                    val: v1,
                    unit: u1,
                    digits: d1,
                },
                Repr::Unit {
                    val: v2,
                    unit: u2,
                    digits: d2,
                },
            ) => {
                let m = (v1 + *d1 as i64).min(v2 + *d2 as i64);
                let v = (*v1).min(*v2);
                if v >= m {
                    return Self::zero_to(p, m);
                }
                let k = (m - v) as u32;
                let modulus = BigUint::from(p).pow(k);
                let t1 = BigUint::from(p).pow((v1 - v) as u32) * u1 % &modulus;
                let t2 = BigUint::from(p).pow((v2 - v) as u32) * u2 % &modulus;
                Self::from_parts(p, v, (t1 + t2) % &modulus, k)
            }
        }
    }

    pub fn neg(&self) -> Self {
        match &self.repr {
            Repr::Unit { val, unit, digits } => {
                let modulus = BigUint::from(self.p).pow(*digits);
                PadicNumber {
                    p: self.p,
                    repr: Repr::Unit {
                        val: *val,
                        unit: &modulus - unit,
                        digits: *digits,
                    },
                }
            }
            _ => self.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p, "mixed primes");
        let p = self.p;
        match (&self.repr, &other.repr) {
            (Repr::ExactZero, _) | (_, Repr::ExactZero) => Self::exact_zero(p),
            (Repr::ZeroTo { abs: a }, Repr::ZeroTo { abs: b }) => Self::zero_to(p, a + b),
            (Repr::ZeroTo { abs }, Repr::Unit { val, .. })
            | (Repr::Unit { val, .. }, Repr::ZeroTo { abs }) => Self::zero_to(p, abs + val),
            (
                Repr::Unit {
                    val: v1,
                    unit: u1,
                    digits: d1,
                },
                Repr::Unit {
                    val: v2,
                    unit: u2,
                    digits: d2,
                },
            ) => {
                let digits = (*d1).min(*d2);
                let modulus = BigUint::from(p).pow(digits);
                PadicNumber {
                    p,
                    repr: Repr::Unit {
                        val: v1 + v2,
                        unit: u1 * u2 % modulus,
                        digits,
                    },
                }
            }
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        assert_eq!(self.p, other.p, "mixed primes");
        let p = self.p;
        let (v2, u2, d2) = match &other.repr {
            Repr::ExactZero => return Err(Error::DivisionByZero),
            Repr::ZeroTo { .. } => return Err(Error::DivisionByUncertifiedZero),
            Repr::Unit { val, unit, digits } => (*val, unit, *digits),
        };
        Ok(match &self.repr {
            Repr::ExactZero => Self::exact_zero(p),
            Repr::ZeroTo { abs } => Self::zero_to(p, abs - v2),
            Repr::Unit {
                val: v1,
                unit: u1,
                digits: d1,
            } => {
                let digits = (*d1).min(d2);
                let modulus = BigUint::from(p).pow(digits);
                let inv = modular_inverse(&(u2 % &modulus), &modulus).expect("unit is invertible");
                PadicNumber {
                    p,
                    repr: Repr::Unit {
                        val: v1 - v2,
                        unit: u1 * inv % modulus,
                        digits,
                    },
                }
            }
        })
    }

    pub fn inv(&self) -> Result<Self> {
        Self::from_u64(self.p, 1, self.digits().max(1)).div(self)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::from_u64(self.p, 1, self.digits().max(crate::DEFAULT_PRECISION));
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiply by p^k (exact shift of the valuation).
    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        match &mut out.repr {
            Repr::ExactZero => {}
            Repr::ZeroTo { abs } => *abs += k,
            Repr::Unit { val, .. } => *val += k,
        }
        out
    }

    /// Drop certified digits down to `digits` (no-op if already coarser).
    pub fn truncate(&self, digits: u32) -> Self {
        match &self.repr {
            Repr::Unit {
                val,
                unit,
                digits: d,
            } if *d > digits => Self::from_parts(self.p, *val, unit.clone(), digits),
            _ => self.clone(),
        }
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::ExactZero => write!(f, "0 (exact, p={})", self.p),
            Repr::ZeroTo { abs } => write!(f, "O({}^{})", self.p, abs),
            Repr::Unit { val, unit, digits } => {
                write!(
                    f,
                    "{}^{} * {} + O({}^{})",
                    self.p,
                    val,
                    unit,
                    self.p,
                    val + *digits as i64
                )
            }
        }
    }
}

pub(crate) fn uint_valuation(n: &BigUint, p: u64) -> u32 {
    let p = BigUint::from(p);
    let mut n = n.clone();
    let mut v = 0u32;
    loop {
        let (q, r) = n.div_rem(&p);
        if r.is_zero() {
            v += 1;
            n = q;
        } else {
            return v;
        }
    }
}

pub(crate) fn bigint_valuation(n: &BigInt, p: u64) -> i64 {
    uint_valuation(n.magnitude(), p) as i64
}

/// A square root of -1 in Z_p for p ≡ 1 mod 4, to `digits` digits.
///
/// For p = 5 the branch with i ≡ 2 mod 5 is returned, the one for which
/// 1 + 2i generates the maximal ideal (5).
pub fn sqrt_minus_one(p: u64, digits: u32) -> Result<PadicNumber> {
    if p % 4 != 1 {
        return Err(Error::HypothesisViolated(format!("p = {p} is not 1 mod 4")));
    }
    let seed = (2..p)
        .find(|&s| (s * s + 1) % p == 0 && (p != 5 || s == 2))
        .ok_or_else(|| Error::Internal("no square root of -1 mod p".into()))?;
    // Newton iteration t <- t - (t^2+1)/(2t) on exact integers mod p^digits
    let modulus = BigUint::from(p).pow(digits);
    let mut t = BigUint::from(seed);
    let mut prec = 1u32;
    while prec < digits {
        prec = (2 * prec).min(digits);
        let m = BigUint::from(p).pow(prec);
        let f = (&t * &t + 1u32) % &m;
        let df = (BigUint::from(2u32) * &t) % &m;
        let inv = modular_inverse(&df, &m).expect("2t is a unit for odd p");
        t = ((&t + &m) - f * inv % &m) % &m;
    }
    t %= &modulus;
    Ok(PadicNumber::from_parts(p, 0, t, digits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_frac;
    use num_traits::ToPrimitive;

    #[test]
    fn anchors_620_and_quarter() {
        let x = PadicNumber::from_u64(5, 620, 8);
        assert_eq!(x.valuation(), Some(1));
        assert_eq!(x.unit_part().unwrap(), &BigUint::from(124u32));

        // 1/4 in Q_3 at 5 digits: 4 * 61 = 244 = 1 mod 243
        let q = PadicNumber::from_rational(3, &rat_frac(1, 4), 5);
        assert_eq!(q.valuation(), Some(0));
        assert_eq!(q.unit_part().unwrap(), &BigUint::from(61u32));
    }

    #[test]
    fn exact_cancellation_flags_zero() {
        let x = PadicNumber::from_rational(5, &rat_frac(7, 3), 10);
        let d = x.sub(&x);
        assert!(d.is_zero_at_precision());
        assert!(!d.is_exact_zero());
        assert_eq!(d.abs_precision(), Some(10));

        let z = PadicNumber::exact_zero(5);
        assert!(z.sub(&z).is_exact_zero());
    }

    #[test]
    fn near_cancellation_loses_digits() {
        // (1 + p^6) - 1 has valuation 6 and only the remaining digits
        let a = PadicNumber::from_bigint(5, &BigInt::from(1 + 5i64.pow(6)), 10);
        let b = PadicNumber::from_u64(5, 1, 10);
        let d = a.sub(&b);
        assert_eq!(d.valuation(), Some(6));
        assert_eq!(d.digits(), 4);
    }

    #[test]
    fn division_tracks_precision() {
        let a = PadicNumber::from_u64(5, 620, 12);
        let b = PadicNumber::from_u64(5, 15, 6);
        let q = a.div(&b).unwrap();
        assert_eq!(q.valuation(), Some(0));
        assert_eq!(q.digits(), 6);
        // divide back
        let back = q.mul(&b);
        assert_eq!(back.valuation(), Some(1));
        assert_eq!(
            back.residue(5).unwrap(),
            BigUint::from(620u32 % 5u32.pow(5))
        );
    }

    #[test]
    fn division_by_uncertified_zero_fails() {
        let a = PadicNumber::from_u64(5, 3, 8);
        let z = a.sub(&a);
        assert!(matches!(a.div(&z), Err(Error::DivisionByUncertifiedZero)));
        assert!(matches!(
            a.div(&PadicNumber::exact_zero(5)),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn ring_axioms_on_random_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for p in [3u64, 5, 13] {
            for _ in 0..60 {
                let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                    PadicNumber::from_rational(
                        p,
                        &rat_frac(rng.gen_range(-400..400), rng.gen_range(1..200)),
                        24,
                    )
                };
                let (x, y, z) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
                // val(xy) = val(x) + val(y)
                if let (Some(vx), Some(vy)) = (x.valuation(), y.valuation()) {
                    assert_eq!(x.mul(&y).valuation(), Some(vx + vy));
                    // val(x+y) >= min, equality when valuations differ
                    let s = x.add(&y);
                    if vx != vy {
                        assert_eq!(s.valuation(), Some(vx.min(vy)));
                    } else if let Some(vs) = s.valuation() {
                        assert!(vs >= vx);
                    }
                }
                // associativity and distributivity to joint precision
                let lhs = x.add(&y).add(&z);
                let rhs = x.add(&y.add(&z));
                assert!(lhs.sub(&rhs).is_zero_at_precision());
                let lhs = x.mul(&y.add(&z));
                let rhs = x.mul(&y).add(&x.mul(&z));
                assert!(lhs.sub(&rhs).is_zero_at_precision());
            }
        }
    }

    #[test]
    fn sqrt_minus_one_anchors() {
        // i ≡ 2 mod 5
        let i1 = sqrt_minus_one(5, 1).unwrap();
        assert_eq!(i1.residue(1).unwrap(), BigUint::from(2u32));
        // the Hensel lift of that branch is 7 mod 25
        let i2 = sqrt_minus_one(5, 2).unwrap();
        assert_eq!(i2.residue(2).unwrap(), BigUint::from(7u32));
        // at 13, either 5 or 8
        let i13 = sqrt_minus_one(13, 1).unwrap();
        let r = i13.residue(1).unwrap().to_u64().unwrap();
        assert!(r == 5 || r == 8);
        assert!(sqrt_minus_one(7, 4).is_err());
    }

    #[test]
    fn sqrt_minus_one_squares_to_minus_one() {
        for digits in [8u32, 32, 64] {
            let i = sqrt_minus_one(5, digits).unwrap();
            let sq1 = i.mul(&i).add(&PadicNumber::from_u64(5, 1, digits));
            assert!(sq1.is_zero_at_precision());
            assert!(sq1.abs_precision().unwrap() >= digits as i64);
        }
    }

    #[test]
    fn stability_under_doubled_precision() {
        let a = sqrt_minus_one(13, 16).unwrap();
        let b = sqrt_minus_one(13, 32).unwrap().truncate(16);
        assert_eq!(a, b);
    }
}
