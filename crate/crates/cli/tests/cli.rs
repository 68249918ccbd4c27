use std::path::PathBuf;
use std::process::{Command, Output};

fn alpha_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alpha-lab"))
        .args(args)
        .env_remove("ALPHA_LAB_SEED")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    alpha_lab(args).status.code().expect("exit code")
}

fn report(args: &[&str]) -> serde_json::Value {
    let out = alpha_lab(args);
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn cusp_certificate_and_truncation() {
    let r = report(&["cusp", "--no-timestamp"]);
    assert_eq!(r["pass"], true);
    assert_eq!(r["result"]["orders"], serde_json::json!([2, 3]));
    assert_eq!(r["result"]["lead2"], "-66");
    assert_eq!(r["result"]["lead3"], "-440");
    assert_eq!(code(&["cusp", "-N", "3"]), 0);
    let ten = report(&["cusp", "-N", "10", "--no-timestamp"]);
    assert_eq!(ten["result"]["orders"], r["result"]["orders"]);
    assert_eq!(ten["result"]["lead3"], r["result"]["lead3"]);
    assert_eq!(code(&["cusp", "-N", "2"]), 2);
}

#[test]
fn lct_exit_codes() {
    assert_eq!(code(&["lct", "--preset", "monomial:2,2", "--beta", "0.5", "--samples", "20000"]), 0);
    let divergent = ["lct", "--preset", "cusp23", "--beta", "0.9", "-R", "6", "--samples", "20000"];
    assert_eq!(code(&divergent), 1);
    let mut expected = divergent.to_vec();
    expected.push("--expect-divergent");
    assert_eq!(code(&expected), 0);
    assert_eq!(code(&["lct", "--preset", "nope"]), 2);
    assert_eq!(code(&["lct", "--beta", "-1"]), 2);
    assert_eq!(code(&["lct", "--weights", "4,2", "--degree", "6"]), 2);
}

#[test]
fn lct_threshold_estimate() {
    let r = report(&["lct", "--preset", "cusp23", "--estimate-threshold", "--samples", "200000", "--no-timestamp"]);
    let t = r["result"]["report"]["threshold_estimated"].as_f64().unwrap();
    assert!((t - 5.0 / 6.0).abs() < 0.02, "{t}");
    assert_eq!(r["result"]["report"]["threshold_predicted"].as_f64().unwrap(), 5.0 / 6.0);
}

#[test]
fn tolerance_overrides() {
    assert_eq!(code(&["reproduce", "--tolerance", "threshold=-0.1"]), 2);
    assert_eq!(code(&["cusp", "--tolerance", "unknown=1"]), 2);
    assert_eq!(code(&["cusp", "--tolerance", "threshold"]), 2);
    let r = report(&["cusp", "--tolerance", "threshold=0.05", "--no-timestamp"]);
    assert_eq!(r["tolerances"]["threshold"], 0.05);
}

#[test]
fn orbit_reports() {
    let r = report(&["orbit", "--trials", "20", "--no-timestamp"]);
    assert_eq!(r["pass"], true);
    assert_eq!(r["result"]["group_order"], 60);
    assert_eq!(r["result"]["stabilizer"]["group_fixed"], 60);
    let exhaustive = report(&["orbit", "--trials", "0", "--no-timestamp"]);
    assert_eq!(exhaustive["pass"], true);
    assert_eq!(exhaustive["result"]["equivariance"]["trials"], 0);
}

#[test]
fn byte_identical_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<String> = (0..2)
        .map(|i| dir.path().join(format!("orbit{i}.json")).to_string_lossy().into_owned())
        .collect();
    for p in &paths {
        assert_eq!(code(&["orbit", "--trials", "30", "--seed", "11", "--no-timestamp", "--output", p]), 0);
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());

    let other = dir.path().join("other.json").to_string_lossy().into_owned();
    code(&["orbit", "--trials", "30", "--seed", "12", "--no-timestamp", "--output", &other]);
    assert_ne!(a, std::fs::read(&other).unwrap());

    let stamped = report(&["cusp"]);
    assert!(stamped["generated_unix"].is_u64());
    assert!(report(&["cusp", "--no-timestamp"]).get("generated_unix").is_none());
}

#[test]
fn seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_alpha-lab"))
        .args(["cusp", "--no-timestamp"])
        .env("ALPHA_LAB_SEED", "99")
        .output()
        .unwrap();
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["seed"], 99);
}

#[test]
fn toric_fixture_and_errors() {
    let r = report(&["toric", "--polytope", &fixture("hexagon.json"), "--samples", "200", "--no-timestamp"]);
    assert_eq!(r["pass"], true);
    assert_eq!(r["result"]["symmetry"]["order"], 12);
    assert_eq!(r["result"]["symmetry"]["fixed_point"], serde_json::json!([0, 0]));
    assert_eq!(code(&["toric", "--polytope", "/does/not/exist.json"]), 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dimension": 2, "vertices": [[0, 0], [1, 0], [2, 0]]}"#).unwrap();
    assert_eq!(code(&["toric", "--polytope", bad.to_str().unwrap()]), 2);
}

#[test]
fn small_hyperbolic_and_green_runs() {
    let r = report(&["hyperbolic", "--functions", "3", "--points", "50", "--resolution", "32", "--no-timestamp"]);
    assert_eq!(r["pass"], true);
    assert_eq!(r["result"]["criteria"].as_array().unwrap().len(), 3);
    assert_eq!(code(&["hyperbolic", "--resolution", "16", "--functions", "1"]), 2);
    assert_eq!(code(&["green", "--resolution", "32", "--trials", "5"]), 0);
    assert_eq!(code(&["green", "--resolution", "32", "--trials", "5", "--c=-1"]), 2);
}

#[test]
fn csv_output() {
    let out = alpha_lab(&["cusp", "--csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("order_x,order_y,lead_x,lead_y,residual_order,truncation,pass"));
    assert_eq!(lines.next(), Some("2,3,-66,-440,7,6,true"));
}
