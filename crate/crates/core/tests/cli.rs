use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn leftover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leftover"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    leftover(args).status.code().unwrap()
}

fn json_out(args: &[&str]) -> Value {
    let out = leftover(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn extract(dir: &Path, family: &str, seed: &str, input: &[u8], name: &str) -> (i32, Vec<u8>) {
    let inp = dir.join(format!("{name}.in"));
    let out = dir.join(format!("{name}.out"));
    std::fs::write(&inp, input).unwrap();
    let c = code(&[
        "extract",
        "--family",
        family,
        "--seed-hex",
        seed,
        "--in",
        inp.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    (c, std::fs::read(&out).unwrap_or_default())
}

#[test]
fn params_examples() {
    let r = json_out(&["params", "--hmin", "100", "--delta", "0.00048828125"]);
    assert_eq!(r["l"], 80);
    let r = json_out(&["params", "--hmin", "0", "--delta", "0.01"]);
    assert_eq!(r["l"], 0);
    assert_eq!(code(&["params", "--delta", "0.01"]), 2);
    assert_eq!(code(&["params", "--hmin", "10", "--l", "3", "--delta", "0.1"]), 2);
    let r = json_out(&["params", "--hmin", "400", "--l", "100", "--n", "1000", "--eps", "0.001"]);
    assert!(r["k"].as_u64().unwrap() >= 100);
    assert!(r["delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn extract_is_deterministic_and_writes_header() {
    let dir = tempfile::tempdir().unwrap();
    let family = "concatenated:256:40:64";
    let seed = "0123456789abcdef".repeat(2);
    let input: Vec<u8> = (0..32u8).map(|i| i.wrapping_mul(37)).collect();
    let (c1, a) = extract(dir.path(), family, &seed, &input, "a");
    let (c2, b) = extract(dir.path(), family, &seed, &input, "b");
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    assert_eq!(a.len(), 5);
    let hdr = std::fs::read_to_string(dir.path().join("a.out.hdr")).unwrap();
    assert_eq!(hdr, format!("bits=40\nfamily={family}\n"));
}

#[test]
fn extract_zero_input_gives_zero_output() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("multiply:64:20", "f".repeat(16)),
        ("polynomial:200:32:32:7", "a5".repeat(4)),
        ("concatenated:300:13:17", "3".repeat(9)),
    ];
    for (i, (family, seed)) in cases.iter().enumerate() {
        let (c, out) = extract(dir.path(), family, seed, &[0u8; 40], &i.to_string());
        assert_eq!(c, 0, "{family}");
        assert!(!out.is_empty() && out.iter().all(|&b| b == 0), "{family}");
    }
}

#[test]
fn extract_length_mismatch_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(extract(dir.path(), "multiply:64:8", "00", &[0u8; 8], "s").0, 2);
    assert_eq!(extract(dir.path(), "multiply:64:8", &"0".repeat(16), &[0u8; 4], "i").0, 2);
}

#[test]
fn family_audit_examples() {
    let r = json_out(&["family-audit", "--family", "multiply:4:2"]);
    assert_eq!(r["audited_delta"], "1/4");
    assert_eq!(r["theoretical_delta"], "1/4");
    let r = json_out(&["family-audit", "--family", "polynomial:12:4:4:3"]);
    assert!(r["audited_delta_f64"].as_f64().unwrap() <= 0.125);
    assert_eq!(code(&["family-audit", "--family", "multiply:40:8"]), 2);
}

#[test]
fn verify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("lhl.json");
    assert_eq!(
        code(&["verify", "lhl", "--trials", "200", "--rng-seed", "7", "--report", report.to_str().unwrap()]),
        0
    );
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["passed"], true);
    assert_eq!(r["trials"], 200);
    assert_eq!(code(&["verify", "metric", "--trials", "1000", "--rng-seed", "42"]), 0);
    assert_eq!(code(&["verify", "unknown", "--trials", "3"]), 2);
}
