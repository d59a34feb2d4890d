//! Polynomials over Q_p: Hensel lifting from a seed, and complete root
//! finding in Q_p by Newton-polygon slope analysis followed by
//! digit-by-digit lifting with branching.

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::padic::{uint_valuation, PadicNumber};
use crate::rational::{modular_inverse, Rational};

/// Dense polynomial with p-adic coefficients; index = degree.
#[derive(Debug, Clone)]
pub struct PadicPolynomial {
    p: u64,
    coeffs: Vec<PadicNumber>,
}

impl PadicPolynomial {
    /// Leading coefficients that are exactly zero are trimmed; a leading
    /// coefficient that merely vanishes at its certified precision leaves
    /// the degree ambiguous and is rejected.
    pub fn new(p: u64, mut coeffs: Vec<PadicNumber>) -> Result<Self> {
        while let Some(last) = coeffs.last() {
            if last.is_exact_zero() {
                coeffs.pop();
            } else {
                break;
            }
        }
        match coeffs.last() {
            None => Err(Error::Malformed("zero polynomial".into())),
            Some(last) if last.is_zero_at_precision() => Err(Error::PrecisionLoss(
                "leading coefficient indistinguishable from zero".into(),
            )),
            Some(_) => Ok(PadicPolynomial { p, coeffs }),
        }
    }

    pub fn from_bigints(p: u64, coeffs: &[BigInt], digits: u32) -> Result<Self> {
        Self::new(
            p,
            coeffs
                .iter()
                .map(|c| PadicNumber::from_bigint(p, c, digits))
                .collect(),
        )
    }

    pub fn from_i64s(p: u64, coeffs: &[i64], digits: u32) -> Result<Self> {
        Self::from_bigints(
            p,
            &coeffs.iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>(),
            digits,
        )
    }

    pub fn from_rationals(p: u64, coeffs: &[Rational], digits: u32) -> Result<Self> {
        Self::new(
            p,
            coeffs
                .iter()
                .map(|c| PadicNumber::from_rational(p, c, digits))
                .collect(),
        )
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn coeff(&self, i: usize) -> PadicNumber {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| PadicNumber::exact_zero(self.p))
    }

    pub fn eval(&self, x: &PadicNumber) -> PadicNumber {
        let mut acc = PadicNumber::exact_zero(self.p);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    pub fn derivative(&self) -> PadicPolynomial {
        if self.coeffs.len() <= 1 {
            return PadicPolynomial {
                p: self.p,
                coeffs: vec![PadicNumber::exact_zero(self.p)],
            };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| {
                c.mul(&PadicNumber::from_u64(
                    self.p,
                    i as u64,
                    c.digits().max(crate::DEFAULT_PRECISION),
                ))
            })
            .collect();
        PadicPolynomial { p: self.p, coeffs }
    }
}

/// Hensel/Newton lifting from a seed satisfying
/// `val(f(seed)) > 2 val(f'(seed))`. Returns a root `r` with
/// `f(r) ≡ 0` to at least `target_digits` of absolute precision beyond
/// `val(f'(seed))`, and `r ≡ seed mod p^(val(f'(seed))+1)`.
pub fn hensel_root(
    f: &PadicPolynomial,
    seed: &PadicNumber,
    target_digits: u32,
) -> Result<PadicNumber> {
    let fs = f.eval(seed);
    if fs.is_exact_zero() {
        return Ok(seed.clone());
    }
    let df = f.derivative();
    let dfs = df.eval(seed);
    let dval = dfs.valuation();
    let fval_floor = match fs.valuation() {
        Some(v) => v,
        // vanishing at certified precision: the valuation is at least abs
        None => fs.abs_precision().unwrap(),
    };
    match dval {
        Some(e) if fval_floor > 2 * e => {}
        _ => {
            return Err(Error::HenselCriterionFailed {
                fval: fs.valuation(),
                dval,
            })
        }
    }
    let mut t = seed.clone();
    for _ in 0..200 {
        let ft = f.eval(&t);
        if ft.is_zero_at_precision() {
            break;
        }
        let dft = df.eval(&t);
        t = t.sub(&ft.div(&dft)?);
    }
    let residual = f.eval(&t);
    if !residual.is_zero_at_precision() {
        return Err(Error::PrecisionLoss(format!(
            "Newton stalled: residual {residual}"
        )));
    }
    if residual.is_exact_zero() {
        return Ok(t);
    }
    let achieved = residual.abs_precision().unwrap();
    if achieved < target_digits as i64 {
        return Err(Error::PrecisionLoss(format!(
            "Hensel root certified only to p^{achieved}, target p^{target_digits}"
        )));
    }
    Ok(t)
}

/// All roots of `f` in Q_p, certified to the working precision.
///
/// Candidate valuations come from the integer slopes of the Newton polygon;
/// per slope, the rescaled polynomial is searched for unit roots digit by
/// digit, switching to Newton once the simple-root criterion holds. Live
/// branching is capped at deg(f); a cluster that persists to the depth of
/// the working precision is reported as ambiguous, never guessed.
pub fn padic_poly_roots(f: &PadicPolynomial) -> Result<Vec<PadicNumber>> {
    let p = f.p;
    let mut f = f.clone();
    let mut roots = Vec::new();

    // t = 0 is a root exactly when the constant coefficient vanishes;
    // reported once regardless of multiplicity
    let mut zero_root = false;
    while f.coeffs[0].is_exact_zero() && f.coeffs.len() > 1 {
        zero_root = true;
        f.coeffs.remove(0);
    }
    if zero_root {
        roots.push(PadicNumber::exact_zero(p));
    }
    if f.coeffs[0].is_zero_at_precision() && f.coeffs.len() > 1 {
        return Err(Error::PrecisionLoss(
            "constant coefficient indistinguishable from zero; zero root undecidable".into(),
        ));
    }
    if f.coeffs.len() == 1 {
        return Ok(roots);
    }

    for v in newton_polygon_integer_slopes(&f)? {
        roots.extend(roots_with_valuation(&f, v)?);
    }
    Ok(roots)
}

/// Candidate root valuations: negatives of the integer slopes of the lower
/// Newton polygon of f. Coefficients known only as O(p^k) must lie on or
/// above the hull built from the certified ones, otherwise the hull itself
/// is uncertain.
fn newton_polygon_integer_slopes(f: &PadicPolynomial) -> Result<Vec<i64>> {
    let pts: Vec<(i64, i64)> = f
        .coeffs
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.valuation().map(|v| (i as i64, v)))
        .collect();
    // lower convex hull, left to right
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // pop b if it lies on or above segment a->pt
            if (b.1 - a.1) * (pt.0 - a.0) >= (pt.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    // uncertain coefficients must not dip below the hull
    for (i, c) in f.coeffs.iter().enumerate() {
        if c.valuation().is_some() || c.is_exact_zero() {
            continue;
        }
        let abs = c.abs_precision().unwrap();
        let x = i as i64;
        for w in hull.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.0 <= x && x <= b.0 {
                // hull height at x, times (b.0 - a.0) to stay integral
                let lhs = abs * (b.0 - a.0);
                let rhs = a.1 * (b.0 - a.0) + (b.1 - a.1) * (x - a.0);
                if lhs < rhs {
                    return Err(Error::PrecisionLoss(format!(
                        "coefficient {i} known only to O(p^{abs}) may cut the Newton polygon"
                    )));
                }
            }
        }
    }
    let mut slopes = Vec::new();
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let rise = b.1 - a.1;
        let run = b.0 - a.0;
        if rise % run == 0 {
            let v = -(rise / run);
            if !slopes.contains(&v) {
                slopes.push(v);
            }
        }
    }
    Ok(slopes)
}

/// Roots of valuation exactly `v`: substitute t = p^v s, normalize to unit
/// content, and search for unit roots s.
fn roots_with_valuation(f: &PadicPolynomial, v: i64) -> Result<Vec<PadicNumber>> {
    let p = f.p;
    let shifted: Vec<PadicNumber> = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c.shift(v * i as i64))
        .collect();
    let content = shifted
        .iter()
        .filter_map(|c| c.valuation())
        .min()
        .ok_or_else(|| Error::PrecisionLoss("no certified coefficient".into()))?;
    let normalized: Vec<PadicNumber> = shifted.iter().map(|c| c.shift(-content)).collect();
    // working absolute precision: everything is known mod p^abs_prec
    let abs_prec = normalized
        .iter()
        .filter_map(|c| c.abs_precision())
        .min()
        .unwrap_or(crate::DEFAULT_PRECISION as i64);
    if abs_prec < 2 {
        return Err(Error::PrecisionLoss(
            "fewer than 2 digits for root search".into(),
        ));
    }
    let abs_prec = abs_prec as u32;
    let residues: Vec<BigUint> = normalized
        .iter()
        .map(|c| c.residue(abs_prec))
        .collect::<Result<_>>()?;
    let unit_roots = unit_roots_mod(&residues, p, abs_prec)?;
    Ok(unit_roots
        .into_iter()
        .map(|(s, digits)| PadicNumber::from_parts(p, 0, s, digits).shift(v))
        .collect())
}

struct ResiduePoly {
    coeffs: Vec<BigUint>,
    modulus: BigUint,
}

impl ResiduePoly {
    fn eval(&self, x: &BigUint) -> BigUint {
        let mut acc = BigUint::zero();
        for c in self.coeffs.iter().rev() {
            acc = (acc * x + c) % &self.modulus;
        }
        acc
    }
}

/// Unit roots of a unit-content polynomial given modulo p^abs_prec, paired
/// with the number of certified digits of each root.
fn unit_roots_mod(coeffs: &[BigUint], p: u64, abs_prec: u32) -> Result<Vec<(BigUint, u32)>> {
    let modulus = BigUint::from(p).pow(abs_prec);
    let g = ResiduePoly {
        coeffs: coeffs.to_vec(),
        modulus: modulus.clone(),
    };
    let dg = ResiduePoly {
        coeffs: coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * i as u64 % &modulus)
            .collect(),
        modulus: modulus.clone(),
    };
    let degree = coeffs.len() - 1;
    let val = |x: &BigUint| -> u32 {
        if x.is_zero() {
            abs_prec
        } else {
            uint_valuation(x, p).min(abs_prec)
        }
    };

    let mut roots: Vec<(BigUint, u32)> = Vec::new();
    let mut live: Vec<BigUint> = (1..p)
        .map(BigUint::from)
        .filter(|r| val(&g.eval(r)) >= 1)
        .collect();
    let mut level = 1u32;

    while !live.is_empty() {
        let mut next = Vec::new();
        for x in live {
            let vf = val(&g.eval(&x));
            let vd = val(&dg.eval(&x));
            // vd < level puts the whole residue class inside the Hensel
            // uniqueness disc x + p^(vd+1) Z_p, so the branch holds exactly
            // one root and certifying it exhausts the branch
            if vd < level && vf > 2 * vd {
                let r = newton_refine(&g, &dg, x, p, abs_prec, vd)?;
                let digits = abs_prec - vd;
                let dup = roots.iter().any(|(s, d)| {
                    let k = BigUint::from(p).pow((*d).min(digits));
                    s % &k == &r % &k
                });
                if !dup {
                    roots.push((r, digits));
                }
                continue;
            }
            if level + 1 >= abs_prec {
                return Err(Error::AmbiguousRoots {
                    precision: abs_prec as i64,
                    depth: level as i64,
                    live: 1,
                });
            }
            let step = BigUint::from(p).pow(level);
            for d in 0..p {
                let cand = (&x + &step * d) % &modulus;
                if val(&g.eval(&cand)) > level {
                    next.push(cand);
                }
            }
        }
        // necessary-congruence survivors near a root cluster can transiently
        // exceed the root count by a factor of p before dying off
        if next.len() > degree * p as usize {
            return Err(Error::AmbiguousRoots {
                precision: abs_prec as i64,
                depth: level as i64,
                live: next.len(),
            });
        }
        live = next;
        level += 1;
    }
    Ok(roots)
}

fn newton_refine(
    g: &ResiduePoly,
    dg: &ResiduePoly,
    mut x: BigUint,
    p: u64,
    abs_prec: u32,
    dval: u32,
) -> Result<BigUint> {
    let modulus = BigUint::from(p).pow(abs_prec);
    let pe = BigUint::from(p).pow(dval);
    let sub_mod = BigUint::from(p).pow(abs_prec - dval);
    for _ in 0..128 {
        let fx = g.eval(&x);
        if fx.is_zero() {
            return Ok(x);
        }
        let dfx = dg.eval(&x);
        let u = (&dfx / &pe) % &sub_mod;
        let inv = modular_inverse(&u, &sub_mod)
            .ok_or_else(|| Error::Internal("derivative unit not invertible".into()))?;
        // f/f' = (f/p^e) * (f'/p^e)^{-1}, an integer since val(f) > 2e
        let q = (&fx / &pe) % &sub_mod;
        let step = q * inv % &sub_mod;
        x = ((&x + &modulus) - step) % &modulus;
    }
    let fx = g.eval(&x);
    if fx.is_zero() {
        Ok(x)
    } else {
        Err(Error::PrecisionLoss("Newton refinement stalled".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use num_traits::ToPrimitive;

    #[test]
    fn hensel_root_of_621() {
        // the alpha with alpha^4 = 621 behind the witness point (alpha,1,5,1)
        let f = PadicPolynomial::from_i64s(5, &[-621, 0, 0, 0, 1], 32).unwrap();
        let seed = PadicNumber::from_u64(5, 1, 32);
        let r = hensel_root(&f, &seed, 28).unwrap();
        let back = r.pow(4);
        assert_eq!(
            back.residue(28).unwrap(),
            BigUint::from(621u32) % BigUint::from(5u64).pow(28)
        );
        // r ≡ seed mod p^{val(f'(seed))+1} = mod 5
        assert_eq!(r.residue(1).unwrap(), BigUint::one());
    }

    #[test]
    fn hensel_root_of_minus_one() {
        let f = PadicPolynomial::from_i64s(5, &[1, 0, 1], 16).unwrap();
        let seed = PadicNumber::from_u64(5, 2, 16);
        let r = hensel_root(&f, &seed, 12).unwrap();
        assert_eq!(r.residue(2).unwrap(), BigUint::from(7u32));
    }

    #[test]
    fn hensel_linear_returns_constant() {
        let f = PadicPolynomial::from_i64s(7, &[-13, 1], 20).unwrap();
        let seed = PadicNumber::from_u64(7, 13, 20);
        let r = hensel_root(&f, &seed, 20).unwrap();
        assert_eq!(r.residue(3).unwrap(), BigUint::from(13u32));
    }

    #[test]
    fn hensel_criterion_failure_reported() {
        // t^2 - 5 at seed 0: val(f) = 1, f' = 0
        let f = PadicPolynomial::from_i64s(5, &[-5, 0, 1], 16).unwrap();
        let seed = PadicNumber::from_u64(5, 5, 16);
        assert!(matches!(
            hensel_root(&f, &seed, 16),
            Err(Error::HenselCriterionFailed { .. })
        ));
    }

    #[test]
    fn hensel_stable_under_doubled_precision() {
        let f32 = PadicPolynomial::from_i64s(5, &[-621, 0, 0, 0, 1], 32).unwrap();
        let f64 = PadicPolynomial::from_i64s(5, &[-621, 0, 0, 0, 1], 64).unwrap();
        let r32 = hensel_root(&f32, &PadicNumber::from_u64(5, 1, 32), 24).unwrap();
        let r64 = hensel_root(&f64, &PadicNumber::from_u64(5, 1, 64), 56).unwrap();
        assert_eq!(r32.residue(30).unwrap(), r64.residue(30).unwrap());
    }

    #[test]
    fn teichmueller_fourth_roots_of_unity() {
        let f = PadicPolynomial::from_i64s(5, &[-1, 0, 0, 0, 1], 24).unwrap();
        let mut roots = padic_poly_roots(&f).unwrap();
        assert_eq!(roots.len(), 4);
        roots.sort_by_key(|r| r.residue(1).unwrap().to_u64().unwrap());
        let res: Vec<u64> = roots
            .iter()
            .map(|r| r.residue(1).unwrap().to_u64().unwrap())
            .collect();
        assert_eq!(res, vec![1, 2, 3, 4]);
        for r in &roots {
            assert!(f.eval(r).is_zero_at_precision());
        }
    }

    #[test]
    fn no_sqrt_of_minus_one_in_q3() {
        let f = PadicPolynomial::from_i64s(3, &[1, 0, 1], 24).unwrap();
        assert!(padic_poly_roots(&f).unwrap().is_empty());
    }

    #[test]
    fn mixed_valuation_roots() {
        // (p t - 1)(t - p) = p t^2 - (1 + p^2) t + p over Q_7
        let p = 7i64;
        let f = PadicPolynomial::from_i64s(7, &[p, -(1 + p * p), p], 24).unwrap();
        let roots = padic_poly_roots(&f).unwrap();
        assert_eq!(roots.len(), 2);
        let mut vals: Vec<i64> = roots.iter().map(|r| r.valuation().unwrap()).collect();
        vals.sort();
        assert_eq!(vals, vec![-1, 1]);
        for r in &roots {
            assert!(f.eval(r).is_zero_at_precision());
        }
    }

    #[test]
    fn repeated_factor_mod_p_still_resolves() {
        // (t - 1)(t - 1 - 5) has a double root mod 5 that separates at level 2
        let f = PadicPolynomial::from_i64s(5, &[6, -7, 1], 24).unwrap();
        let mut res: Vec<u64> = padic_poly_roots(&f)
            .unwrap()
            .iter()
            .map(|r| r.residue(2).unwrap().to_u64().unwrap())
            .collect();
        res.sort();
        assert_eq!(res, vec![1, 6]);
    }

    #[test]
    fn genuine_double_root_is_ambiguous_not_guessed() {
        // (t - 1)^2: the repeated-root valuation pattern persists
        let f = PadicPolynomial::from_i64s(5, &[1, -2, 1], 12).unwrap();
        assert!(matches!(
            padic_poly_roots(&f),
            Err(Error::AmbiguousRoots { .. })
        ));
    }

    #[test]
    fn zero_roots_from_exact_zero_constant() {
        // t^2 (t - 3) over Q_5
        let p = 5;
        let coeffs = vec![
            PadicNumber::exact_zero(p),
            PadicNumber::exact_zero(p),
            PadicNumber::from_i64(p, -3, 20),
            PadicNumber::from_u64(p, 1, 20),
        ];
        let f = PadicPolynomial::new(p, coeffs).unwrap();
        let roots = padic_poly_roots(&f).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().any(|r| r.is_exact_zero()));
        assert!(roots
            .iter()
            .any(|r| !r.is_zero_at_precision() && r.residue(1).unwrap() == BigUint::from(3u32)));
    }

    #[test]
    fn roots_match_doubled_precision() {
        // 3 = 4^2 mod 13, so t^2 - 3 has two unit roots in Q_13
        let f24 = PadicPolynomial::from_i64s(13, &[-3, 0, 1], 24).unwrap();
        let f48 = PadicPolynomial::from_i64s(13, &[-3, 0, 1], 48).unwrap();
        let r24 = padic_poly_roots(&f24).unwrap();
        let r48 = padic_poly_roots(&f48).unwrap();
        assert_eq!(r24.len(), 2);
        assert_eq!(r24.len(), r48.len());
        for r in &r24 {
            let key = r.residue(20).unwrap();
            assert!(r48.iter().any(|s| s.residue(20).unwrap() == key));
        }
    }
}
