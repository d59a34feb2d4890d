//! `qb`: classify the odd Brauer group of a diagonal quartic surface,
//! evaluate the obstruction at p-adic points, construct witness orbits,
//! verify the integral divisibility corollaries, and answer low-level
//! elliptic divisibility queries, with machine-readable output.
//!
//! Exit codes: 0 success, 1 mathematical error (hypothesis violation),
//! 2 precision/undecided, 64 malformed input.

use std::io::Read;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::{json, Value as Json};

use qb_core::brauer::{self, Mode, Place, Verdict};
use qb_core::elliptic::{Base, CurveEm};
use qb_core::error::Error;
use qb_core::quartic::{fourth_root_in_qp, DiagonalQuartic, SurfacePoint};
use qb_core::rational::{Rational, SIDE_SIGNS};
use qb_core::search::{self, CorollaryFamily};
use qb_core::selftest::{run_all, run_criterion, SelftestConfig};
use qb_core::value::Value;

const SCHEMA: &str = "qb-1";

#[derive(Parser)]
#[command(
    name = "qb",
    about = "odd Brauer classes of diagonal quartics and their local evaluation",
    disable_help_subcommand = true
)]
struct Cli {
    /// Working precision in p-adic digits (>= 16; env QB_PRECISION).
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Search bound for point searches.
    #[arg(long, global = true)]
    bound: Option<i64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for the randomized suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the odd-order Brauer class of a surface.
    Classify(ClassifyArgs),
    /// Evaluate the obstruction at a point of D(Q_p) (or the real place).
    Evaluate(EvaluateArgs),
    /// Construct the witness orbit certifying surjectivity at ell.
    Witnesses(SurfaceOnlyArgs),
    /// Search a corollary family and check its divisibility conclusion.
    VerifyCorollary(CorollaryArgs),
    /// Is a point divisible by ell on y^2 = x^3 - m x over Q_p?
    Divisible(DivisibleArgs),
    /// Does the surface have Q_p-points?
    Solvable(SolvableArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
    /// Re-derive the verdict recorded in an emitted JSON report.
    VerifyCertificate(VerifyCertArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// Coefficients a,b,c,d.
    #[arg(long, allow_hyphen_values = true)]
    surface: String,
    /// Classify over Q_p instead of Q.
    #[arg(long)]
    local: Option<u64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, allow_hyphen_values = true)]
    surface: String,
    /// A prime, or "real".
    #[arg(long)]
    prime: String,
    /// Coordinates x,y,z,w; with --lift-first one coordinate may be a
    /// symbol to be solved by a Hensel lift.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long)]
    lift_first: bool,
}

#[derive(Args)]
struct SurfaceOnlyArgs {
    #[arg(long, allow_hyphen_values = true)]
    surface: String,
}

#[derive(Args)]
struct CorollaryArgs {
    /// co1.1 | co1.2 | co3.1 | co3.2
    #[arg(long)]
    family: String,
    #[arg(long, allow_hyphen_values = true)]
    n: i64,
    #[arg(long, default_value_t = 0)]
    epsilon: u8,
}

#[derive(Args)]
struct DivisibleArgs {
    #[arg(long, allow_hyphen_values = true)]
    m: String,
    #[arg(long)]
    prime: u64,
    #[arg(long)]
    ell: u64,
    /// Coordinates X,Y (integers or rationals).
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    /// Use the division-polynomial oracle instead of the structural test.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct SolvableArgs {
    #[arg(long, allow_hyphen_values = true)]
    surface: String,
    #[arg(long)]
    prime: u64,
}

#[derive(Args)]
struct SelftestArgs {
    /// Run a single criterion (1-9).
    #[arg(long)]
    criterion: Option<u8>,
}

#[derive(Args)]
struct VerifyCertArgs {
    /// Path to a JSON report; "-" reads stdin.
    #[arg(long, default_value = "-")]
    file: String,
}

struct Config {
    precision: u32,
    bound: i64,
    seed: u64,
    format: Format,
}

#[derive(Serialize)]
struct Report {
    schema: &'static str,
    command: String,
    inputs: Json,
    result: Json,
    certificate: Json,
    precision_used: u32,
}

enum CliError {
    Usage(String),
    Math(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Math(e)
    }
}

type CliResult = Result<Report, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap would exit 2; usage errors are 64 here
            let _ = e.print();
            return ExitCode::from(64);
        }
    };
    let precision = cli
        .precision
        .or_else(|| {
            std::env::var("QB_PRECISION")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(qb_core::DEFAULT_PRECISION);
    let cfg = Config {
        precision,
        bound: cli.bound.unwrap_or(20),
        seed: cli.seed.unwrap_or(0x5eed),
        format: cli.format,
    };
    if cfg.precision < 16 {
        eprintln!("error: precision must be at least 16");
        return ExitCode::from(64);
    }
    if cfg.bound < 1 {
        eprintln!("error: bound must be at least 1");
        return ExitCode::from(64);
    }

    let outcome = dispatch(&cli.command, &cfg);
    match outcome {
        Ok(report) => {
            print_report(&report, cfg.format);
            // selftest reports overall failure through the result payload
            let failed = report.result.get("all_passed") == Some(&Json::Bool(false))
                || report.result.get("verdicts_match") == Some(&Json::Bool(false));
            if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(64)
        }
        Err(CliError::Math(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_precision() { 2 } else { 1 })
        }
    }
}

fn print_report(report: &Report, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report).unwrap()),
        Format::Text => {
            println!("command: {}", report.command);
            println!("inputs: {}", report.inputs);
            println!(
                "result: {}",
                serde_json::to_string_pretty(&report.result).unwrap()
            );
            if !report.certificate.is_null() {
                println!(
                    "certificate: {}",
                    serde_json::to_string_pretty(&report.certificate).unwrap()
                );
            }
            println!("precision used: {}", report.precision_used);
        }
    }
}

fn dispatch(command: &Command, cfg: &Config) -> CliResult {
    match command {
        Command::Classify(a) => cmd_classify(a, cfg),
        Command::Evaluate(a) => cmd_evaluate(a, cfg),
        Command::Witnesses(a) => cmd_witnesses(a, cfg),
        Command::VerifyCorollary(a) => cmd_verify_corollary(a, cfg),
        Command::Divisible(a) => cmd_divisible(a, cfg),
        Command::Solvable(a) => cmd_solvable(a, cfg),
        Command::Selftest(a) => cmd_selftest(a, cfg),
        Command::VerifyCertificate(a) => cmd_verify_certificate(a, cfg),
    }
}

fn parse_surface(spec: &str) -> Result<DiagonalQuartic, CliError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "surface needs 4 coefficients, got {}",
            parts.len()
        )));
    }
    let mut coeffs = Vec::new();
    for p in &parts {
        let n =
            BigInt::from_str(p).map_err(|_| CliError::Usage(format!("bad coefficient {p:?}")))?;
        coeffs.push(n);
    }
    Ok(DiagonalQuartic::new([
        coeffs[0].clone(),
        coeffs[1].clone(),
        coeffs[2].clone(),
        coeffs[3].clone(),
    ])?)
}

/// Parse x,y,z,w where with `lift` one token may be a symbol (any
/// non-numeric word) marking the coordinate to solve by Hensel lifting.
fn parse_point(
    d: &DiagonalQuartic,
    spec: &str,
    lift: bool,
    p: Option<u64>,
    precision: u32,
) -> Result<SurfacePoint, CliError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "point needs 4 coordinates, got {}",
            parts.len()
        )));
    }
    let mut coords: Vec<Option<Rational>> = Vec::new();
    let mut lift_index = None;
    for (i, t) in parts.iter().enumerate() {
        match Rational::from_str(t) {
            Ok(q) => coords.push(Some(q)),
            Err(_) => {
                if !lift {
                    return Err(CliError::Usage(format!(
                        "coordinate {t:?} is symbolic; pass --lift-first to solve for it"
                    )));
                }
                if lift_index.replace(i).is_some() {
                    return Err(CliError::Usage("only one coordinate may be lifted".into()));
                }
                coords.push(None);
            }
        }
    }
    match lift_index {
        None => {
            let vals: [Value; 4] =
                std::array::from_fn(|i| Value::Exact(coords[i].clone().unwrap()));
            Ok(SurfacePoint::new(d, vals)?)
        }
        Some(idx) => {
            let p = p.ok_or_else(|| CliError::Usage("--lift-first needs a finite prime".into()))?;
            let cs = d.coeffs_rational();
            let mut rhs = Rational::from_integer(BigInt::from(0));
            for i in 0..4 {
                if i == idx {
                    continue;
                }
                let q = coords[i].clone().unwrap();
                rhs += Rational::from_integer(BigInt::from(SIDE_SIGNS[i])) * &cs[i] * q.pow(4);
            }
            let target = -rhs / &cs[idx] * Rational::from_integer(BigInt::from(SIDE_SIGNS[idx]));
            let root = fourth_root_in_qp(&target, p, precision + qb_core::PRECISION_MARGIN)?;
            let vals: [Value; 4] = std::array::from_fn(|i| {
                if i == idx {
                    Value::Padic(root.clone())
                } else {
                    Value::Exact(coords[i].clone().unwrap())
                }
            });
            Ok(SurfacePoint::new(d, vals)?)
        }
    }
}

fn point_json(l: &SurfacePoint) -> Json {
    Json::Array(
        l.coords
            .iter()
            .map(|c| Json::String(c.to_string()))
            .collect(),
    )
}

fn cmd_classify(a: &ClassifyArgs, cfg: &Config) -> CliResult {
    let d = parse_surface(&a.surface)?;
    let mode = match a.local {
        Some(p) => Mode::Local(require_prime(p)?),
        None => Mode::Global,
    };
    let class = brauer::classify_odd(&d, mode)?;
    Ok(Report {
        schema: SCHEMA,
        command: "classify".into(),
        inputs: json!({ "surface": a.surface, "local": a.local }),
        result: json!({ "class": class.value.label() }),
        certificate: json!({ "witness_condition": class.witness_condition }),
        precision_used: cfg.precision,
    })
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn require_prime(p: u64) -> Result<u64, CliError> {
    if is_prime_u64(p) {
        Ok(p)
    } else {
        Err(CliError::Usage(format!("{p} is not prime")))
    }
}

fn parse_place(s: &str) -> Result<Place, CliError> {
    if s == "real" || s == "infinity" {
        return Ok(Place::Real);
    }
    let p = s
        .parse::<u64>()
        .map_err(|_| CliError::Usage(format!("bad place {s:?}; expected a prime or \"real\"")))?;
    Ok(Place::Prime(require_prime(p)?))
}

fn cmd_evaluate(a: &EvaluateArgs, cfg: &Config) -> CliResult {
    let d = parse_surface(&a.surface)?;
    let place = parse_place(&a.prime)?;
    let p = match place {
        Place::Prime(p) => Some(p),
        Place::Real => None,
    };
    let l = parse_point(&d, &a.point, a.lift_first, p, cfg.precision)?;
    let verdict = brauer::evaluate(&d, place, &l, cfg.precision)?;
    Ok(Report {
        schema: SCHEMA,
        command: "evaluate".into(),
        inputs: json!({
            "surface": a.surface,
            "prime": a.prime,
            "point": a.point,
            "lift_first": a.lift_first,
            "resolved_point": point_json(&l),
        }),
        result: json!({ "verdict": verdict_label(verdict.value) }),
        certificate: serde_json::to_value(&verdict.certificate).unwrap(),
        precision_used: verdict.precision_used,
    })
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Zero => "zero",
        Verdict::Nonzero => "nonzero",
    }
}

fn cmd_witnesses(a: &SurfaceOnlyArgs, cfg: &Config) -> CliResult {
    let d = parse_surface(&a.surface)?;
    let ws = brauer::surjectivity_witnesses(&d, cfg.precision)?;
    let orbit: Vec<Json> = ws
        .orbit
        .iter()
        .map(|(pt, mult)| json!({ "point": point_json(pt), "multiplier": mult }))
        .collect();
    Ok(Report {
        schema: SCHEMA,
        command: "witnesses".into(),
        inputs: json!({ "surface": a.surface }),
        result: json!({
            "ell": ws.ell,
            "base": point_json(&ws.base),
            "orbit": orbit,
            "multiplier_note": "relative multipliers follow the pairing relations; \
                                not independently verified, unlike the Nonzero verdicts",
        }),
        certificate: Json::Null,
        precision_used: cfg.precision,
    })
}

fn cmd_verify_corollary(a: &CorollaryArgs, cfg: &Config) -> CliResult {
    let family = CorollaryFamily::parse(&a.family)?;
    let report = search::verify_corollary(family, a.n, a.epsilon, cfg.bound)?;
    let ok = report.violations.is_empty();
    let result = serde_json::to_value(&report).unwrap();
    Ok(Report {
        schema: SCHEMA,
        command: "verify-corollary".into(),
        inputs: json!({ "family": a.family, "n": a.n, "epsilon": a.epsilon, "bound": cfg.bound }),
        result,
        certificate: json!({ "holds": ok }),
        precision_used: cfg.precision,
    })
}

fn cmd_divisible(a: &DivisibleArgs, cfg: &Config) -> CliResult {
    let m = Rational::from_str(&a.m).map_err(|_| CliError::Usage(format!("bad m {:?}", a.m)))?;
    let parts: Vec<&str> = a.point.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::Usage("point needs 2 coordinates X,Y".into()));
    }
    let x = Rational::from_str(parts[0]).map_err(|_| CliError::Usage("bad X".into()))?;
    let y = Rational::from_str(parts[1]).map_err(|_| CliError::Usage("bad Y".into()))?;
    require_prime(a.prime)?;
    let m = Value::Exact(m);
    let curve = CurveEm::new(
        m.clone(),
        Base::Qp {
            p: a.prime,
            precision: cfg.precision,
        },
    )?;
    let point = curve.point(Value::Exact(x), Value::Exact(y))?;
    let (divisible, transcript): (bool, Json) = if a.oracle {
        let v = qb_core::division::is_divisible_oracle(&m, &point, a.ell, a.prime, cfg.precision)?;
        (v, json!({ "rule": "division-polynomial oracle" }))
    } else {
        let (v, t) =
            qb_core::elliptic::is_divisible_by_ell_with(&m, &point, a.ell, a.prime, cfg.precision)?;
        (v, serde_json::to_value(&t).unwrap())
    };
    Ok(Report {
        schema: SCHEMA,
        command: "divisible".into(),
        inputs: json!({
            "m": a.m, "prime": a.prime, "ell": a.ell, "point": a.point, "oracle": a.oracle,
        }),
        result: json!({ "divisible": divisible }),
        certificate: transcript,
        precision_used: cfg.precision,
    })
}

fn cmd_solvable(a: &SolvableArgs, cfg: &Config) -> CliResult {
    let d = parse_surface(&a.surface)?;
    require_prime(a.prime)?;
    let soluble = search::is_locally_soluble(&d, a.prime, cfg.precision)?;
    Ok(Report {
        schema: SCHEMA,
        command: "solvable".into(),
        inputs: json!({ "surface": a.surface, "prime": a.prime }),
        result: json!({ "soluble": soluble }),
        certificate: Json::Null,
        precision_used: cfg.precision,
    })
}

fn cmd_selftest(a: &SelftestArgs, cfg: &Config) -> CliResult {
    let scfg = SelftestConfig {
        precision: cfg.precision,
        seed: cfg.seed,
    };
    let outcomes = match a.criterion {
        Some(id) => {
            if !(1..=9).contains(&id) {
                return Err(CliError::Usage("criterion must be 1..=9".into()));
            }
            vec![run_criterion(id, &scfg)]
        }
        None => run_all(&scfg),
    };
    for o in &outcomes {
        eprintln!("{}", o.line());
        if !o.passed {
            for d in &o.details {
                eprintln!("  {d}");
            }
        }
    }
    let all_passed = outcomes.iter().all(|o| o.passed);
    let rows: Vec<Json> = outcomes
        .iter()
        .map(|o| {
            json!({
                "criterion": o.id,
                "name": o.name,
                "passed": o.passed,
                "elapsed_ms": o.elapsed_ms,
            })
        })
        .collect();
    Ok(Report {
        schema: SCHEMA,
        command: "selftest".into(),
        inputs: json!({ "criterion": a.criterion, "seed": cfg.seed }),
        result: json!({ "all_passed": all_passed, "table": rows }),
        certificate: Json::Null,
        precision_used: cfg.precision,
    })
}

/// Re-run the computation recorded in a report and compare verdicts.
fn cmd_verify_certificate(a: &VerifyCertArgs, cfg: &Config) -> CliResult {
    let raw = if a.file == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::Usage(format!("reading stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(&a.file)
            .map_err(|e| CliError::Usage(format!("reading {}: {e}", a.file)))?
    };
    let doc: Json =
        serde_json::from_str(&raw).map_err(|e| CliError::Usage(format!("bad JSON: {e}")))?;
    if doc.get("schema").and_then(Json::as_str) != Some(SCHEMA) {
        return Err(CliError::Usage(format!("expected schema {SCHEMA:?}")));
    }
    let command = doc
        .get("command")
        .and_then(Json::as_str)
        .ok_or_else(|| CliError::Usage("missing command".into()))?
        .to_string();
    let inputs = doc.get("inputs").cloned().unwrap_or(Json::Null);
    let recorded = doc.get("result").cloned().unwrap_or(Json::Null);
    let precision = doc
        .get("precision_used")
        .and_then(Json::as_u64)
        .map(|v| v as u32)
        .unwrap_or(cfg.precision);

    let get_str = |k: &str| -> Result<String, CliError> {
        inputs
            .get(k)
            .and_then(Json::as_str)
            .map(str::to_string)
            .ok_or_else(|| CliError::Usage(format!("missing input {k}")))
    };
    let sub_cfg = Config {
        precision,
        ..Config {
            precision,
            bound: cfg.bound,
            seed: cfg.seed,
            format: cfg.format,
        }
    };
    let rerun = match command.as_str() {
        "classify" => {
            let args = ClassifyArgs {
                surface: get_str("surface")?,
                local: inputs.get("local").and_then(Json::as_u64),
            };
            cmd_classify(&args, &sub_cfg)?
        }
        "evaluate" => {
            let args = EvaluateArgs {
                surface: get_str("surface")?,
                prime: get_str("prime")?,
                point: get_str("point")?,
                lift_first: inputs
                    .get("lift_first")
                    .and_then(Json::as_bool)
                    .unwrap_or(false),
            };
            cmd_evaluate(&args, &sub_cfg)?
        }
        "divisible" => {
            let args = DivisibleArgs {
                m: get_str("m")?,
                prime: inputs
                    .get("prime")
                    .and_then(Json::as_u64)
                    .ok_or_else(|| CliError::Usage("missing input prime".into()))?,
                ell: inputs
                    .get("ell")
                    .and_then(Json::as_u64)
                    .ok_or_else(|| CliError::Usage("missing input ell".into()))?,
                point: get_str("point")?,
                oracle: inputs
                    .get("oracle")
                    .and_then(Json::as_bool)
                    .unwrap_or(false),
            };
            cmd_divisible(&args, &sub_cfg)?
        }
        "solvable" => {
            let args = SolvableArgs {
                surface: get_str("surface")?,
                prime: inputs
                    .get("prime")
                    .and_then(Json::as_u64)
                    .ok_or_else(|| CliError::Usage("missing input prime".into()))?,
            };
            cmd_solvable(&args, &sub_cfg)?
        }
        "verify-corollary" => {
            let args = CorollaryArgs {
                family: get_str("family")?,
                n: inputs
                    .get("n")
                    .and_then(Json::as_i64)
                    .ok_or_else(|| CliError::Usage("missing input n".into()))?,
                epsilon: inputs.get("epsilon").and_then(Json::as_u64).unwrap_or(0) as u8,
            };
            let bound = inputs
                .get("bound")
                .and_then(Json::as_i64)
                .unwrap_or(cfg.bound);
            let sub = Config { bound, ..sub_cfg };
            cmd_verify_corollary(&args, &sub)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "cannot re-verify command {other:?}"
            )));
        }
    };

    // mathematical content must match; for corollary reports compare the
    // violation list, otherwise the whole result
    let matches = if command == "verify-corollary" {
        recorded.get("violations") == rerun.result.get("violations")
    } else {
        recorded == rerun.result
    };
    Ok(Report {
        schema: SCHEMA,
        command: "verify-certificate".into(),
        inputs: json!({ "file": a.file, "verified_command": command }),
        result: json!({
            "verdicts_match": matches,
            "recorded": recorded,
            "recomputed": rerun.result,
        }),
        certificate: Json::Null,
        precision_used: precision,
    })
}
