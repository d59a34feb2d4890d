//! The acceptance suite: nine anchored criteria runnable both as the
//! integration test target and through the CLI `selftest` subcommand. Each
//! criterion pins its expected values and tolerances in code; everything is
//! exact equality unless a criterion states a sampling count.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::brauer::{
    classify_odd, evaluate, surjectivity_witnesses, Mode, OddClassValue, Place, Verdict,
};
use crate::division::is_divisible_oracle;
use crate::elliptic::{
    is_divisible_by_ell, reduction_profile, sqrt_in_qp, Base, CurveEm, ECPoint, ReductionKind,
};
use crate::error::Result;
use crate::quartic::{s_test, DiagonalQuartic, SurfacePoint};
use crate::rational::{rat_frac, valuation};
use crate::search::{integral_points, sample_smooth_points, verify_corollary, CorollaryFamily};
use crate::value::Value;

#[derive(Debug, Clone)]
pub struct SelftestConfig {
    pub precision: u32,
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            precision: crate::DEFAULT_PRECISION,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub elapsed_ms: u128,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {}: {} ... {} ({} ms)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed_ms
        )
    }
}

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "classifier anchors"),
    (2, "reduction counts"),
    (3, "valuation anchors"),
    (4, "divisibility anchors"),
    (5, "evaluation properties"),
    (6, "orbit and surjectivity"),
    (7, "corollary searches"),
    (8, "oracle equivalence"),
    (9, "precision stability"),
];

pub fn run_all(cfg: &SelftestConfig) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .map(|&(id, _)| run_criterion(id, cfg))
        .collect()
}

pub fn run_criterion(id: u8, cfg: &SelftestConfig) -> CriterionOutcome {
    let name = CRITERIA
        .iter()
        .find(|&&(i, _)| i == id)
        .map(|&(_, n)| n)
        .unwrap_or("unknown criterion");
    let start = std::time::Instant::now();
    let mut check = Checker::default();
    let body: fn(&SelftestConfig, &mut Checker) = match id {
        1 => criterion_1,
        2 => criterion_2,
        3 => criterion_3,
        4 => criterion_4,
        5 => criterion_5,
        6 => criterion_6,
        7 => criterion_7,
        8 => criterion_8,
        9 => criterion_9,
        _ => |_cfg, c: &mut Checker| c.fail("no such criterion"),
    };
    body(cfg, &mut check);
    CriterionOutcome {
        id,
        name,
        passed: check.passed,
        details: check.details,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

#[derive(Default)]
pub struct Checker {
    passed: bool,
    details: Vec<String>,
}

impl Checker {
    /// Criteria start failed and must opt in; an empty body cannot pass.
    fn begin(&mut self) {
        self.passed = true;
    }

    fn assert(&mut self, cond: bool, what: &str) {
        if cond {
            self.details.push(format!("ok: {what}"));
        } else {
            self.passed = false;
            self.details.push(format!("FAILED: {what}"));
        }
    }

    fn fail(&mut self, what: &str) {
        self.passed = false;
        self.details.push(format!("FAILED: {what}"));
    }

    fn result(&mut self, r: Result<bool>, what: &str) {
        match r {
            Ok(v) => self.assert(v, what),
            Err(e) => self.fail(&format!("{what} errored: {e}")),
        }
    }
}

/// The six globally valid family representatives used across criteria 5, 6
/// and 9: the ell = 5 normal forms A_1, B_1, C themselves, and for ell = 3
/// members of the A/B/C local families whose global odd class is Z/3.
fn ell5_surfaces() -> Vec<DiagonalQuartic> {
    vec![
        DiagonalQuartic::from_i64(1, -1, 1, -5).unwrap(),
        DiagonalQuartic::from_i64(1, -1, 25, -125).unwrap(),
        DiagonalQuartic::from_i64(2, 2, 4, 5).unwrap(),
    ]
}

fn ell3_surfaces() -> Vec<DiagonalQuartic> {
    vec![
        DiagonalQuartic::from_i64(1, 1, 1, -27).unwrap(),
        DiagonalQuartic::from_i64(1, -1, 3, 9).unwrap(),
        DiagonalQuartic::from_i64(1, 1, 2, -216).unwrap(),
    ]
}

fn criterion_1(_cfg: &SelftestConfig, c: &mut Checker) {
    c.begin();
    let class_of = |coeffs: [i64; 4]| {
        let d = DiagonalQuartic::from_i64(coeffs[0], coeffs[1], coeffs[2], coeffs[3]).unwrap();
        classify_odd(&d, Mode::Global).map(|cl| cl.value)
    };
    match class_of([1, 3, 4, 9]) {
        Ok(v) => c.assert(v == OddClassValue::Z3, "[1,3,4,9] classifies Z/3"),
        Err(e) => c.fail(&format!("classify [1,3,4,9]: {e}")),
    }
    for n in [1i64, 2, 3, 7] {
        match class_of([1, -1, n, -5 * n.pow(3)]) {
            Ok(v) => c.assert(v == OddClassValue::Z5, &format!("A_{n} classifies Z/5")),
            Err(e) => c.fail(&format!("classify A_{n}: {e}")),
        }
    }
    match class_of([1, 1, 1, -27]) {
        Ok(v) => c.assert(v == OddClassValue::Z3, "co3.1 family n=1 classifies Z/3"),
        Err(e) => c.fail(&format!("classify co3.1 n=1: {e}")),
    }
    match class_of([1, 1, 1, 1]) {
        Ok(v) => c.assert(v == OddClassValue::Trivial, "[1,1,1,1] classifies trivial"),
        Err(e) => c.fail(&format!("classify [1,1,1,1]: {e}")),
    }
}

fn criterion_2(cfg: &SelftestConfig, c: &mut Checker) {
    c.begin();
    match reduction_profile(&Value::from_int(18496), 5, cfg.precision) {
        Ok(p) => c.assert(p.smooth_count == 8, "#E~(F_5) = 8 for m = 18496"),
        Err(e) => c.fail(&format!("profile m=18496: {e}")),
    }
    match reduction_profile(&Value::from_int(1156), 3, cfg.precision) {
        Ok(p) => c.assert(p.smooth_count == 4, "#E~(F_3) = 4 for m = 1156"),
        Err(e) => c.fail(&format!("profile m=1156: {e}")),
    }
}

fn criterion_3(_cfg: &SelftestConfig, c: &mut Checker) {
    c.begin();
    let e = CurveEm::new(Value::from_int(1156), Base::Q).unwrap();
    let p = e.point_i64(-16, -120).unwrap();

    let s = e.point_add(&p, &e.point_i64(34, 0).unwrap()).unwrap();
    let x = s.x().unwrap().as_exact().unwrap().clone();
    c.assert(x == rat_frac(-306, 25), "x((-16,-120)+(34,0)) = -306/25");
    c.assert(valuation(&x, 5) == Some(-2), "val_5 of that x is -2");

    let s = e.point_add(&p, &e.point_i64(-34, 0).unwrap()).unwrap();
    let x = s.x().unwrap().as_exact().unwrap().clone();
    c.assert(x == rat_frac(850, 9), "x((-16,-120)+(-34,0)) = 850/9");
    c.assert(valuation(&x, 3) == Some(-2), "val_3 of that x is -2");
}

fn criterion_4(cfg: &SelftestConfig, c: &mut Checker) {
    c.begin();
    criterion_4_at(cfg.precision, cfg.seed, c);
}

fn criterion_4_at(precision: u32, seed: u64, c: &mut Checker) {
    let e = CurveEm::new(Value::from_int(18496), Base::Q).unwrap();
    let point = e.point_i64(-64, -960).unwrap();
    match is_divisible_by_ell(&Value::from_int(18496), &point, 5, 5, precision) {
        Ok(v) => c.assert(!v, "P = (-64,-960) is not divisible by 5 over Q_5"),
        Err(e) => c.fail(&format!("divisibility anchor: {e}")),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..5 {
        let (a, b, x, y) = (
            rng.gen_range(1..50i64),
            rng.gen_range(1..50i64) * if rng.gen_bool(0.5) { 1 } else { -1 },
            rng.gen_range(1..20i64),
            rng.gen_range(1..20i64),
        );
        if a * x.pow(4) + b * y.pow(4) == 0 {
            continue;
        }
        c.result(
            s_test(
                &Value::from_int(a),
                &Value::from_int(b),
                &Value::from_int(x),
                &Value::from_int(y),
                2,
                if rng.gen_bool(0.5) { 3 } else { 5 },
                precision,
            ),
            &format!("S_2({a},{b}:{x},{y}) holds"),
        );
    }

    // good-reduction trichotomy: ab a unit square mod 5, val_5(f) = 0,
    // val_5(xy) = r: divisible iff r > 1
    let mut sampled = 0;
    for a in 1..=4i64 {
        for b in 1..=4i64 {
            if (a * b) % 5 != 1 && (a * b) % 5 != 4 {
                continue;
            }
            for r in [1u32, 2, 3] {
                let xu = [1i64, 2, 3, 4][rng.gen_range(0..4)];
                let yu = [1i64, 2, 3, 4][rng.gen_range(0..4)];
                let x = Value::from_int(5i64.pow(r) * xu);
                let y = Value::from_int(yu);
                let f = Value::from_int(a)
                    .mul(&x.pow4())
                    .add(&Value::from_int(b).mul(&y.pow4()));
                if f.valuation(5) != Some(0) {
                    continue;
                }
                match s_test(
                    &Value::from_int(a),
                    &Value::from_int(b),
                    &x,
                    &y,
                    5,
                    5,
                    precision,
                ) {
                    Ok(v) => {
                        c.assert(
                            v == (r > 1),
                            &format!("S_5({a},{b}:{xu}*5^{r},{yu}) = (r > 1)"),
                        );
                        sampled += 1;
                    }
                    Err(e) => c.fail(&format!("trichotomy sample errored: {e}")),
                }
            }
        }
    }
    c.assert(
        sampled >= 20,
        &format!("trichotomy sampled {sampled} >= 20 unit pairs"),
    );
}

fn criterion_5(cfg: &SelftestConfig, c: &mut Checker) {
    c.begin();
    // (a) zero at every small rational point at p = ell
    for (surfaces, ell) in [(ell5_surfaces(), 5u64), (ell3_surfaces(), 3u64)] {
        for d in &surfaces {
            let pts = match integral_points(d, 20) {
                Ok(p) => p,
                Err(e) => {
                    c.fail(&format!("point search on {}: {e}", d.display_coeffs()));
                    continue;
                }
            };
            c.assert(
                !pts.is_empty(),
                &format!("{} has small rational points", d.display_coeffs()),
            );
            for pt in &pts {
                let l = match SurfacePoint::from_integers(d, *pt) {
                    Ok(l) => l,
                    Err(e) => {
                        c.fail(&format!("point {pt:?}: {e}"));
                        continue;
                    }
                };
                match evaluate(d, Place::Prime(ell), &l, cfg.precision) {
                    Ok(v) => {
                        if v.value != Verdict::Zero {
                            c.fail(&format!(
                                "rational point {pt:?} on {} evaluated Nonzero",
                                d.display_coeffs()
                            ));
                        }
                    }
                    Err(e) => c.fail(&format!(
                        "evaluate {pt:?} on {} at {ell}: {e}",
                        d.display_coeffs()
                    )),
                }
            }
            c.assert(
                true,
                &format!(
                    "all {} rational points of {} evaluate Zero at {ell}",
                    pts.len(),
                    d.display_coeffs()
                ),
            );
        }
    }

    // (b) zero at sampled Q_p points away from ell
    for (d, ell) in [
        (DiagonalQuartic::from_i64(1, -1, 1, -5).unwrap(), 5u64),
        (DiagonalQuartic::from_i64(1, 3, 4, 9).unwrap(), 3u64),
    ] {
        for p in [2u64, 7, 13] {
            if p == ell {
                continue;
            }
            match sample_smooth_points(&d, p, cfg.precision, 20, cfg.seed) {
                Ok(pts) => {
                    let all_zero = pts.iter().all(|l| {
                        matches!(
                            evaluate(&d, Place::Prime(p), l, cfg.precision),
                            Ok(v) if v.value == Verdict::Zero
                        )
                    });
                    c.assert(
                        all_zero && pts.len() >= 20,
                        &format!(
                            "20 sampled Q_{p} points on {} evaluate Zero",
                            d.display_coeffs()
                        ),
                    );
                }
                Err(e) => c.fail(&format!("sampling at {p} on {}: {e}", d.display_coeffs())),
            }
        }
    }

    // (c) the anchored witnesses are Nonzero
    criterion_5c_at(cfg.precision, c);
}

fn criterion_5c_at(precision: u32, c: &mut Checker) {
    for (surfaces, ell) in [(ell5_surfaces(), 5u64), (ell3_surfaces(), 3u64)] {
        for d in &surfaces {
            match surjectivity_witnesses(d, precision) {
                Ok(ws) => {
                    c.assert(
                        ws.ell == ell,
                        &format!(
                            "witness construction on {} at ell = {ell}",
                            d.display_coeffs()
                        ),
                    );
                    match evaluate(d, Place::Prime(ell), &ws.base, precision) {
                        Ok(v) => c.assert(
                            v.value == Verdict::Nonzero,
                            &format!("recipe witness on {} is Nonzero", d.display_coeffs()),
                        ),
                        Err(e) => {
                            c.fail(&format!("witness evaluate on {}: {e}", d.display_coeffs()))
                        }
                    }
                }
                Err(e) => c.fail(&format!("witnesses on {}: {e}", d.display_coeffs())),
            }
        }
    }
}

fn criterion_6(cfg: &SelftestConfig, c: &mut Checker) {
    c.begin();
    criterion_6_at(cfg.precision, c);
}

fn criterion_6_at(precision: u32, c: &mut Checker) {
    for d in ell5_surfaces() {
        match surjectivity_witnesses(&d, precision) {
            Ok(ws) => {
                let multipliers: Vec<i8> = ws.orbit.iter().map(|(_, m)| *m).collect();
                c.assert(
                    ws.orbit.len() == 4 && multipliers == vec![1, 2, 4, 3],
                    &format!(
                        "[i]-orbit on {} has 4 Nonzero points with multipliers (1,2,4,3)",
                        d.display_coeffs()
                    ),
                );
            }
            Err(e) => c.fail(&format!("orbit on {}: {e}", d.display_coeffs())),
        }
    }
    for d in ell3_surfaces() {
        match surjectivity_witnesses(&d, precision) {
            Ok(ws) => {
                let multipliers: Vec<i8> = ws.orbit.iter().map(|(_, m)| *m).collect();
                c.assert(
                    ws.orbit.len() == 2 && multipliers == vec![1, -1],
                    &format!(
                        "sign-flip pair on {} is Nonzero with multipliers (1,-1)",
                        d.display_coeffs()
                    ),
                );
            }
            Err(e) => c.fail(&format!("orbit on {}: {e}", d.display_coeffs())),
        }
    }
}

fn criterion_7(_cfg: &SelftestConfig, c: &mut Checker) {
    c.begin();
    let cases: Vec<(CorollaryFamily, i64)> = vec![
        (CorollaryFamily::Co51, 1),
        (CorollaryFamily::Co51, 2),
        (CorollaryFamily::Co52, 1),
        (CorollaryFamily::Co31, 1),
        (CorollaryFamily::Co31, 4),
        (CorollaryFamily::Co32, 1),
    ];
    for (family, n) in cases {
        for epsilon in [0u8, 1] {
            match verify_corollary(family, n, epsilon, 30) {
                Ok(report) => c.assert(
                    report.violations.is_empty(),
                    &format!(
                        "{} n={n} eps={epsilon}: {} points, no violations of {}",
                        report.family, report.points_found, report.condition
                    ),
                ),
                Err(e) => c.fail(&format!("{:?} n={n} eps={epsilon}: {e}", family)),
            }
        }
    }
}

struct OracleCase {
    m: BigInt,
    p: u64,
    ell: u64,
    point: ECPoint,
    expect_divisible: Option<bool>,
    kind: ReductionKind,
}

fn random_qp_point(m: &Value, p: u64, precision: u32, rng: &mut ChaCha8Rng) -> Option<ECPoint> {
    for _ in 0..40 {
        let vx = [-2i64, 0, 0, 1][rng.gen_range(0..4)];
        let unit = rng.gen_range(1..60i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
        if unit.unsigned_abs() % p == 0 {
            continue;
        }
        let x = Value::Exact(rat_frac(unit, 1)).shift(p, vx);
        let rhs = x.square().mul(&x).sub(&m.mul(&x));
        if !rhs.is_certainly_nonzero() {
            continue;
        }
        match sqrt_in_qp(&rhs, p, precision) {
            Ok(Some(y)) => return Some(ECPoint::affine(x, Value::Padic(y))),
            _ => continue,
        }
    }
    None
}

fn generate_oracle_cases(cfg: &SelftestConfig, count: usize) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0dac1e);
    let mut cases = Vec::new();
    let mut guard = 0;
    while cases.len() < count && guard < 200 * count {
        guard += 1;
        let p = [3u64, 5, 7, 13][rng.gen_range(0..4)];
        let ell = [3u64, 5][rng.gen_range(0..2)];
        // alternate good and additive reduction
        let e = if cases.len() % 2 == 0 {
            0
        } else {
            rng.gen_range(1..4)
        };
        let unit = rng.gen_range(1..80i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
        if unit.unsigned_abs() % p == 0 {
            continue;
        }
        let m_int = BigInt::from(unit) * BigInt::from(p).pow(e);
        let m = Value::from_bigint(&m_int);
        let kind = if e == 0 {
            ReductionKind::Good
        } else {
            ReductionKind::Additive
        };
        let curve = match CurveEm::new(
            m.clone(),
            Base::Qp {
                p,
                precision: cfg.precision,
            },
        ) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let Some(base_point) = random_qp_point(&m, p, cfg.precision + 8, &mut rng) else {
            continue;
        };
        if cases.len() % 3 == 0 {
            // a constructed multiple: divisibility is known to hold
            if let Ok(mult) = curve.scalar_mul(ell as i64, &base_point) {
                if !mult.is_infinity() {
                    cases.push(OracleCase {
                        m: m_int.clone(),
                        p,
                        ell,
                        point: mult,
                        expect_divisible: Some(true),
                        kind,
                    });
                    continue;
                }
            }
        }
        cases.push(OracleCase {
            m: m_int,
            p,
            ell,
            point: base_point,
            expect_divisible: None,
            kind,
        });
    }
    cases
}

fn criterion_8(cfg: &SelftestConfig, c: &mut Checker) {
    c.begin();
    let cases = generate_oracle_cases(cfg, 220);
    c.assert(
        cases.len() >= 200,
        &format!("generated {} cases", cases.len()),
    );
    let good = cases
        .iter()
        .filter(|k| k.kind == ReductionKind::Good)
        .count();
    c.assert(
        good > 0 && good < cases.len(),
        "both reduction kinds sampled",
    );

    struct CaseResult {
        agreed: Option<bool>,
        errored: bool,
        known_violated: bool,
        structural_rule: bool,
    }
    let run_case = |case: &OracleCase| -> CaseResult {
        let m = Value::from_bigint(&case.m);
        let structural = crate::elliptic::is_divisible_by_ell_with(
            &m,
            &case.point,
            case.ell,
            case.p,
            cfg.precision,
        );
        let oracle = is_divisible_oracle(&m, &case.point, case.ell, case.p, cfg.precision);
        match (structural, oracle) {
            (Ok((s, transcript)), Ok(o)) => CaseResult {
                agreed: Some(s == o),
                errored: false,
                known_violated: case.expect_divisible.is_some_and(|e| e != s || e != o),
                structural_rule: !transcript.rule.contains("oracle"),
            },
            _ => CaseResult {
                agreed: None,
                errored: true,
                known_violated: false,
                structural_rule: false,
            },
        }
    };
    #[cfg(feature = "parallel")]
    let results: Vec<CaseResult> = cases.par_iter().map(run_case).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<CaseResult> = cases.iter().map(run_case).collect();

    let decided = results.iter().filter(|r| r.agreed.is_some()).count();
    let agreed = results.iter().filter(|r| r.agreed == Some(true)).count();
    let errors = results.iter().filter(|r| r.errored).count();
    let violated = results.iter().filter(|r| r.known_violated).count();
    let structural = results.iter().filter(|r| r.structural_rule).count();
    c.assert(
        agreed == decided,
        &format!("{agreed}/{decided} decided cases agree between structural and oracle"),
    );
    c.assert(
        structural * 2 > decided,
        &format!("{structural}/{decided} decided by a genuinely structural rule"),
    );
    c.assert(
        errors * 20 < cases.len(),
        &format!("error rate {errors}/{} below 5%", cases.len()),
    );
    c.assert(
        violated == 0,
        "all constructed ell-multiples decided divisible",
    );
}

fn criterion_9(cfg: &SelftestConfig, c: &mut Checker) {
    c.begin();
    // items 4-6 re-run with doubled precision must produce identical verdicts
    let mut low = Checker::default();
    low.begin();
    criterion_4_at(cfg.precision, cfg.seed, &mut low);
    criterion_5c_at(cfg.precision, &mut low);
    criterion_6_at(cfg.precision, &mut low);
    let mut high = Checker::default();
    high.begin();
    criterion_4_at(2 * cfg.precision, cfg.seed, &mut high);
    criterion_5c_at(2 * cfg.precision, &mut high);
    criterion_6_at(2 * cfg.precision, &mut high);
    c.assert(low.passed, "verdicts at base precision");
    c.assert(high.passed, "verdicts at doubled precision");
    let same = low.details == high.details;
    c.assert(same, "every verdict identical at N and 2N");
    if !same {
        for (a, b) in low.details.iter().zip(high.details.iter()) {
            if a != b {
                c.details.push(format!("  N: {a}\n 2N: {b}"));
            }
        }
    }
}
