//! Division polynomials for y^2 = x^3 - m x and the root-finding
//! divisibility oracle.
//!
//! For odd n, x([n]P) = phi_n(x) / psi_n(x)^2 with phi_n monic of degree
//! n^2 and psi_n of degree (n^2 - 1)/2 in x alone. A point R = (x_R, y_R)
//! with 6R ≠ 0 is divisible by ell in E(Q_p) exactly when
//! `phi_ell(t) - x_R psi_ell(t)^2` has a root in Q_p: the root is the
//! x-coordinate of a preimage, whose y-coordinate is automatically rational
//! (otherwise Galois conjugation would force 2R = 0). This path is
//! independent of the filtration machinery and serves as its oracle.

use crate::elliptic::{Base, CurveEm, ECPoint};
use crate::error::{Error, Result};
use crate::poly::{padic_poly_roots, PadicPolynomial};
use crate::value::Value;

fn pzero(n: usize) -> Vec<Value> {
    vec![Value::zero(); n]
}

fn padd(a: &[Value], b: &[Value]) -> Vec<Value> {
    let mut out = pzero(a.len().max(b.len()));
    for (i, c) in a.iter().enumerate() {
        out[i] = out[i].add(c);
    }
    for (i, c) in b.iter().enumerate() {
        out[i] = out[i].add(c);
    }
    out
}

fn psub(a: &[Value], b: &[Value]) -> Vec<Value> {
    padd(a, &b.iter().map(Value::neg).collect::<Vec<_>>())
}

fn pmul(a: &[Value], b: &[Value]) -> Vec<Value> {
    let mut out = pzero(a.len() + b.len() - 1);
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&ca.mul(cb));
        }
    }
    out
}

fn pscale(a: &[Value], c: &Value) -> Vec<Value> {
    a.iter().map(|x| x.mul(c)).collect()
}

/// Multiply by x^k.
fn pshift(a: &[Value], k: usize) -> Vec<Value> {
    let mut out = pzero(a.len() + k);
    for (i, c) in a.iter().enumerate() {
        out[i + k] = c.clone();
    }
    out
}

pub fn poly_eval(a: &[Value], x: &Value) -> Value {
    let mut acc = Value::zero();
    for c in a.iter().rev() {
        acc = acc.mul(x).add(c);
    }
    acc
}

/// psi_ell and phi_ell for ell in {3, 5}.
pub struct DivisionData {
    pub psi: Vec<Value>,
    pub numerator: Vec<Value>,
}

/// Assembled from the standard recursion specialized to A = -m, B = 0,
/// with even-index psi's carried as 2y * omega:
///   psi_3   = 3x^4 - 6 m x^2 - m^2
///   omega_4 = 2(x^6 - 5 m x^4 - 5 m^2 x^2 + m^3)
///   psi_5   = 16 f^2 omega_4 - psi_3^3,          f = x^3 - m x
///   omega_6 = psi_3 (psi_5 - omega_4^2)
///   phi_3   = x psi_3^2 - 4 f omega_4
///   phi_5   = x psi_5^2 - 4 f omega_4 omega_6
pub fn division_polynomials(ell: u64, m: &Value) -> DivisionData {
    let m2 = m.square();
    let psi3 = vec![
        m2.neg(),
        Value::zero(),
        m.mul(&Value::from_int(-6)),
        Value::zero(),
        Value::from_int(3),
    ];
    let f = vec![Value::zero(), m.neg(), Value::zero(), Value::from_int(1)];
    let omega4 = vec![
        m2.mul(m).mul(&Value::from_int(2)),
        Value::zero(),
        m2.mul(&Value::from_int(-10)),
        Value::zero(),
        m.mul(&Value::from_int(-10)),
        Value::zero(),
        Value::from_int(2),
    ];
    match ell {
        3 => {
            let phi3 = psub(
                &pshift(&pmul(&psi3, &psi3), 1),
                &pscale(&pmul(&f, &omega4), &Value::from_int(4)),
            );
            DivisionData {
                psi: psi3,
                numerator: phi3,
            }
        }
        5 => {
            let f2 = pmul(&f, &f);
            let psi3_cubed = pmul(&pmul(&psi3, &psi3), &psi3);
            let psi5 = psub(
                &pscale(&pmul(&f2, &omega4), &Value::from_int(16)),
                &psi3_cubed,
            );
            let omega6 = pmul(&psi3, &psub(&psi5, &pmul(&omega4, &omega4)));
            let phi5 = psub(
                &pshift(&pmul(&psi5, &psi5), 1),
                &pscale(&pmul(&pmul(&f, &omega4), &omega6), &Value::from_int(4)),
            );
            DivisionData {
                psi: psi5,
                numerator: phi5,
            }
        }
        _ => panic!("only ell = 3 and ell = 5 are supported"),
    }
}

/// The degree-ell^2 polynomial whose Q_p-roots are the x-coordinates of
/// points R' with ell R' = ±R: phi_ell(t) - x_R psi_ell(t)^2.
pub fn ell_division_numerator(ell: u64, m: &Value, x_r: &Value) -> Vec<Value> {
    let data = division_polynomials(ell, m);
    psub(&data.numerator, &pscale(&pmul(&data.psi, &data.psi), x_r))
}

/// Root-finding divisibility test, precondition 6R ≠ 0.
pub fn is_divisible_oracle(
    m: &Value,
    r: &ECPoint,
    ell: u64,
    p: u64,
    precision: u32,
) -> Result<bool> {
    if ell != 3 && ell != 5 {
        return Err(Error::HypothesisViolated(format!(
            "ell = {ell}; only 3 and 5 are supported"
        )));
    }
    let x_r = match r {
        ECPoint::Affine { x, .. } => x,
        ECPoint::Infinity => return Err(Error::InfinitePoint),
    };
    let base = Base::Qp { p, precision };
    let curve = CurveEm::new(m.clone(), base)?;
    if curve.scalar_mul(6, r)?.is_infinity() {
        return Err(Error::HypothesisViolated(
            "oracle precondition 6R ≠ 0 fails".into(),
        ));
    }
    let g = ell_division_numerator(ell, m, x_r);
    let poly = PadicPolynomial::new(p, g.iter().map(|c| c.to_padic(p, precision)).collect())?;
    let roots = padic_poly_roots(&poly)?;
    Ok(!roots.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_frac, Rational};
    use rand::{Rng, SeedableRng};

    fn exact(coeffs: &[Value]) -> Vec<Rational> {
        coeffs
            .iter()
            .map(|c| c.as_exact().unwrap().clone())
            .collect()
    }

    #[test]
    fn psi3_coefficients() {
        // 3t^4 - 6mt^2 - m^2
        let d = division_polynomials(3, &Value::from_int(1));
        assert_eq!(
            exact(&d.psi),
            vec![rat(-1), rat(0), rat(-6), rat(0), rat(3)]
        );
    }

    #[test]
    fn phi3_coefficient_pattern() {
        // t^9 + 12mt^7 + 30m^2t^5 - 36m^3t^3 + 9m^4t for several m
        for m in [1i64, 2, -3, 7, 1156] {
            let d = division_polynomials(3, &Value::from_int(m));
            let mm = rat(m);
            let expected = vec![
                rat(0),
                rat(9) * mm.pow(4),
                rat(0),
                rat(-36) * mm.pow(3),
                rat(0),
                rat(30) * mm.pow(2),
                rat(0),
                rat(12) * mm.clone(),
                rat(0),
                rat(1),
            ];
            assert_eq!(exact(&d.numerator), expected, "m = {m}");
        }
    }

    #[test]
    fn degrees_and_leading_coefficients() {
        let d = division_polynomials(5, &Value::from_int(7));
        assert_eq!(d.psi.len() - 1, 12);
        assert_eq!(d.numerator.len() - 1, 25);
        assert_eq!(d.psi.last().unwrap().as_exact().unwrap(), &rat(5));
        assert_eq!(d.numerator.last().unwrap().as_exact().unwrap(), &rat(1));
    }

    /// Random exact points: pick x, y and solve m = (x^3 - y^2)/x, so that
    /// (x, y) lies on y^2 = x^3 - m x by construction.
    fn random_point(rng: &mut rand_chacha::ChaCha8Rng) -> (Value, CurveEm, ECPoint) {
        loop {
            let x = rat_frac(rng.gen_range(-30..30), rng.gen_range(1..8));
            let y = rat_frac(rng.gen_range(-30..30), rng.gen_range(1..8));
            if x.numer().bits() == 0 {
                continue;
            }
            let m = (x.pow(3) - y.pow(2)) / x.clone();
            if m.numer().bits() == 0 {
                continue;
            }
            let curve = CurveEm::new(Value::Exact(m.clone()), Base::Q).unwrap();
            let pt = curve.point(Value::Exact(x), Value::Exact(y)).unwrap();
            return (Value::Exact(m), curve, pt);
        }
    }

    #[test]
    fn g_of_triple_vanishes_at_base_point() {
        // group-law oracle: for R = 3S, g_R(x_S) = 0 exactly
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..12 {
            let (m, curve, s) = random_point(&mut rng);
            let r = curve.scalar_mul(3, &s).unwrap();
            let ECPoint::Affine { x: x_r, .. } = &r else {
                continue;
            };
            let g = ell_division_numerator(3, &m, x_r);
            let v = poly_eval(&g, s.x().unwrap());
            assert!(v.decide_zero().unwrap(), "g_R(x_S) != 0");
        }
    }

    #[test]
    fn multiplication_by_five_in_coordinates() {
        // phi_5 / psi_5^2 evaluated at x(S) equals x(5S) for random S
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..8 {
            let (m, curve, s) = random_point(&mut rng);
            let r = curve.scalar_mul(5, &s).unwrap();
            let ECPoint::Affine { x: x5, .. } = &r else {
                continue;
            };
            let d = division_polynomials(5, &m);
            let num = poly_eval(&d.numerator, s.x().unwrap());
            let den = poly_eval(&d.psi, s.x().unwrap()).square();
            let quot = num.div(&den).unwrap();
            assert_eq!(quot.as_exact(), x5.as_exact());
        }
    }

    #[test]
    fn oracle_matches_structural_anchor() {
        // the same non-divisibility as the structural path
        let e = CurveEm::new(Value::from_int(18496), Base::Q).unwrap();
        let r = e.point_i64(-64, -960).unwrap();
        assert!(!is_divisible_oracle(&Value::from_int(18496), &r, 5, 5, 32).unwrap());
    }

    #[test]
    fn oracle_accepts_constructed_multiples() {
        let e = CurveEm::new(Value::from_int(1156), Base::Q).unwrap();
        let s = e.point_i64(-16, -120).unwrap();
        for ell in [3u64, 5] {
            let r = e.scalar_mul(ell as i64, &s).unwrap();
            for p in [3u64, 5, 7] {
                assert!(
                    is_divisible_oracle(&Value::from_int(1156), &r, ell, p, 40).unwrap(),
                    "ell={ell}, p={p}"
                );
            }
        }
    }

    #[test]
    fn oracle_with_padic_twist_parameter() {
        // m entering as a finite-precision value must reproduce the exact
        // answer (this is the path taken when f itself is a Hensel lift)
        let m_exact = Value::from_int(18496);
        let m_padic = Value::Padic(crate::padic::PadicNumber::from_u64(5, 18496, 40));
        let e = CurveEm::new(m_exact.clone(), Base::Q).unwrap();
        let r = e.point_i64(-64, -960).unwrap();
        assert_eq!(
            is_divisible_oracle(&m_padic, &r, 5, 5, 32).unwrap(),
            is_divisible_oracle(&m_exact, &r, 5, 5, 32).unwrap(),
        );
    }

    #[test]
    fn oracle_rejects_small_torsion() {
        // 6R = 0 violates the precondition: (0,0) is 2-torsion
        let e = CurveEm::new(Value::from_int(7), Base::Q).unwrap();
        let t = e.point_i64(0, 0).unwrap();
        assert!(matches!(
            is_divisible_oracle(&Value::from_int(7), &t, 3, 5, 32),
            Err(Error::HypothesisViolated(_))
        ));
        assert!(matches!(
            is_divisible_oracle(&Value::from_int(7), &ECPoint::Infinity, 3, 5, 32),
            Err(Error::InfinitePoint)
        ));
    }
}
