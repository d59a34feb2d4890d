//! End-to-end tests of the `qb` binary: anchored verdicts, the JSON schema,
//! the certificate round-trip, and exit codes.

use std::process::{Command, Output};

fn qb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn classify_z3_surface() {
    let doc = json_of(&qb(&["classify", "--surface", "1,3,4,9"]));
    assert_eq!(doc["schema"], "qb-1");
    assert_eq!(doc["result"]["class"], "Z/3");
}

#[test]
fn classify_c_surface_locally() {
    let doc = json_of(&qb(&["classify", "--surface", "2,2,4,5", "--local", "5"]));
    assert_eq!(doc["result"]["class"], "Z/5");
}

#[test]
fn divisible_anchor() {
    let doc = json_of(&qb(&[
        "divisible",
        "--m",
        "18496",
        "--prime",
        "5",
        "--ell",
        "5",
        "--point=-64,-960",
    ]));
    assert_eq!(doc["result"]["divisible"], false);
    // the oracle route agrees
    let doc = json_of(&qb(&[
        "divisible",
        "--m",
        "18496",
        "--prime",
        "5",
        "--ell",
        "5",
        "--point=-64,-960",
        "--oracle",
    ]));
    assert_eq!(doc["result"]["divisible"], false);
}

#[test]
fn evaluate_witness_and_roundtrip() {
    let out = qb(&[
        "evaluate",
        "--surface",
        "1,-1,1,-5",
        "--prime",
        "5",
        "--point",
        "a,1,5,1",
        "--lift-first",
    ]);
    let doc = json_of(&out);
    assert_eq!(doc["result"]["verdict"], "nonzero");

    let path = std::env::temp_dir().join("qb_roundtrip_report.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let verify = qb(&["verify-certificate", "--file", path.to_str().unwrap()]);
    let vdoc = json_of(&verify);
    assert_eq!(vdoc["result"]["verdicts_match"], true);
}

#[test]
fn evaluate_rational_point_is_zero() {
    let doc = json_of(&qb(&[
        "evaluate",
        "--surface",
        "1,3,4,9",
        "--prime",
        "3",
        "--point",
        "1,1,1,0",
    ]));
    assert_eq!(doc["result"]["verdict"], "zero");
}

#[test]
fn text_and_json_agree_on_content() {
    let j = json_of(&qb(&["classify", "--surface", "2,2,4,5"]));
    let t = qb(&["classify", "--surface", "2,2,4,5", "--format", "text"]);
    let text = String::from_utf8_lossy(&t.stdout);
    assert!(text.contains("Z/5"), "text output: {text}");
    assert_eq!(j["result"]["class"], "Z/5");
}

#[test]
fn exit_codes() {
    // mathematical error: trivial class
    let out = qb(&[
        "evaluate",
        "--surface",
        "1,1,1,1",
        "--prime",
        "3",
        "--point",
        "1,1,1,1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    // usage: malformed surface
    let out = qb(&["classify", "--surface", "1,2,3"]);
    assert_eq!(out.status.code(), Some(64));
    // usage: not a prime
    let out = qb(&["solvable", "--surface", "1,1,1,1", "--prime", "4"]);
    assert_eq!(out.status.code(), Some(64));
    // usage: unknown subcommand
    let out = qb(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn witnesses_orbit_shape() {
    let doc = json_of(&qb(&["witnesses", "--surface", "1,-1,1,-5"]));
    let orbit = doc["result"]["orbit"].as_array().unwrap();
    assert_eq!(orbit.len(), 4);
    let mults: Vec<i64> = orbit
        .iter()
        .map(|o| o["multiplier"].as_i64().unwrap())
        .collect();
    assert_eq!(mults, vec![1, 2, 4, 3]);
}

#[test]
fn corollary_report() {
    let doc = json_of(&qb(&[
        "verify-corollary",
        "--family",
        "co3.1",
        "--n",
        "1",
        "--epsilon",
        "1",
        "--bound",
        "15",
    ]));
    assert_eq!(doc["result"]["violations"].as_array().unwrap().len(), 0);
    assert!(doc["result"]["points_found"].as_u64().unwrap() > 0);
}
