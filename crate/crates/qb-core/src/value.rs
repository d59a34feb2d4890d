//! A field element of Q or Q_p. Arithmetic between exact values stays
//! exact; as soon as a finite-precision p-adic operand enters, the exact
//! side is promoted at matching absolute precision and the result carries
//! p-adic precision tracking.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::padic::PadicNumber;
use crate::rational::{self, Rational};

#[derive(Debug, Clone)]
pub enum Value {
    Exact(Rational),
    Padic(PadicNumber),
}

impl Value {
    pub fn from_int(n: i64) -> Self {
        Value::Exact(Rational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: &BigInt) -> Self {
        Value::Exact(Rational::from_integer(n.clone()))
    }

    pub fn zero() -> Self {
        Value::from_int(0)
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Padic(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    /// Promote to a p-adic approximation at `digits` significant digits.
    pub fn to_padic(&self, p: u64, digits: u32) -> PadicNumber {
        match self {
            Value::Exact(q) => PadicNumber::from_rational(p, q, digits),
            Value::Padic(x) => {
                assert_eq!(x.prime(), p, "mixed primes");
                x.clone()
            }
        }
    }

    /// p-adic valuation; `None` when the value is zero or indistinguishable
    /// from zero at its precision.
    pub fn valuation(&self, p: u64) -> Option<i64> {
        match self {
            Value::Exact(q) => rational::valuation(q, p),
            Value::Padic(x) => {
                assert_eq!(x.prime(), p, "mixed primes");
                x.valuation()
            }
        }
    }

    /// Decide whether the value is zero. Errors when the value vanishes at
    /// its certified precision without being exactly zero: that distinction
    /// must not be guessed.
    pub fn decide_zero(&self) -> Result<bool> {
        match self {
            Value::Exact(q) => Ok(q.is_zero()),
            Value::Padic(x) => {
                if x.is_exact_zero() {
                    Ok(true)
                } else if x.is_zero_at_precision() {
                    Err(Error::PrecisionLoss(format!(
                        "cannot certify zero/nonzero: {x}"
                    )))
                } else {
                    Ok(false)
                }
            }
        }
    }

    /// True if the value is certainly nonzero at its precision.
    pub fn is_certainly_nonzero(&self) -> bool {
        matches!(self.decide_zero(), Ok(false))
    }

    pub fn residue_mod(&self, p: u64, k: u32) -> Result<BigUint> {
        match self {
            Value::Exact(q) => rational::residue_mod(q, p, k),
            Value::Padic(x) => x.residue(k),
        }
    }

    fn binop(
        &self,
        other: &Value,
        exact: impl Fn(&Rational, &Rational) -> Rational,
        padic: impl Fn(&PadicNumber, &PadicNumber) -> PadicNumber,
    ) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(exact(a, b)),
            (Value::Padic(a), Value::Padic(b)) => Value::Padic(padic(a, b)),
            (Value::Exact(a), Value::Padic(b)) => {
                let pa = promote(a, b);
                Value::Padic(padic(&pa, b))
            }
            (Value::Padic(a), Value::Exact(b)) => {
                let pb = promote(b, a);
                Value::Padic(padic(a, &pb))
            }
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        self.binop(other, |a, b| a + b, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Value) -> Value {
        self.binop(other, |a, b| a - b, |a, b| a.sub(b))
    }

    pub fn mul(&self, other: &Value) -> Value {
        self.binop(other, |a, b| a * b, |a, b| a.mul(b))
    }

    pub fn neg(&self) -> Value {
        match self {
            Value::Exact(q) => Value::Exact(-q),
            Value::Padic(x) => Value::Padic(x.neg()),
        }
    }

    pub fn div(&self, other: &Value) -> Result<Value> {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => {
                if b.is_zero() {
                    Err(Error::DivisionByZero)
                } else {
                    Ok(Value::Exact(a / b))
                }
            }
            (Value::Padic(a), Value::Padic(b)) => Ok(Value::Padic(a.div(b)?)),
            (Value::Exact(a), Value::Padic(b)) => {
                let pa = promote(a, b);
                Ok(Value::Padic(pa.div(b)?))
            }
            (Value::Padic(a), Value::Exact(b)) => {
                if b.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                let pb = promote(b, a);
                Ok(Value::Padic(a.div(&pb)?))
            }
        }
    }

    pub fn square(&self) -> Value {
        self.mul(self)
    }

    pub fn pow4(&self) -> Value {
        self.square().square()
    }

    /// Multiply by p^k.
    pub fn shift(&self, p: u64, k: i64) -> Value {
        match self {
            Value::Exact(q) => {
                let pw = BigInt::from(p).pow(k.unsigned_abs() as u32);
                if k >= 0 {
                    Value::Exact(q * Rational::from_integer(pw))
                } else {
                    Value::Exact(q / Rational::from_integer(pw))
                }
            }
            Value::Padic(x) => Value::Padic(x.shift(k)),
        }
    }

    /// Non-archimedean sign information for exact values (used by searches).
    pub fn exact_sign(&self) -> Option<i8> {
        match self {
            Value::Exact(q) => Some(if q.is_zero() {
                0
            } else if q.is_negative() {
                -1
            } else {
                1
            }),
            Value::Padic(_) => None,
        }
    }
}

/// Promote an exact rational next to a p-adic operand, carrying enough
/// digits that the approximate operand limits the result's precision.
fn promote(q: &Rational, alongside: &PadicNumber) -> PadicNumber {
    let p = alongside.prime();
    match alongside.abs_precision() {
        Some(abs) => PadicNumber::from_rational_abs(p, q, abs + crate::PRECISION_MARGIN as i64),
        None => PadicNumber::from_rational(p, q, crate::DEFAULT_PRECISION),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{q}"),
            Value::Padic(x) => write!(f, "{x}"),
        }
    }
}

impl From<Rational> for Value {
    fn from(q: Rational) -> Self {
        Value::Exact(q)
    }
}

impl From<PadicNumber> for Value {
    fn from(x: PadicNumber) -> Self {
        Value::Padic(x)
    }
}
