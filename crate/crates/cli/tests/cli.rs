use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use logtr_cli::output::ResultDoc;
use serde_json::Value;

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn logtr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logtr")).args(args).env_remove("LOGTR_CACHE_DIR").output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn pole_points(doc: &Value) -> Vec<String> {
    let mut v: Vec<String> = doc["terms"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|t| t["poles"].as_array().unwrap().iter().map(|p| p["q"].as_str().unwrap().to_string()))
        .collect();
    v.sort();
    v.dedup();
    v
}

fn compute(file: &str, mode: &str, g: &str, n: &str) -> Output {
    logtr(&["compute", "--curve", spec(file).to_str().unwrap(), "--mode", mode, "--g", g, "--n", n])
}

fn check(file: &str, suite: &str, budget: &str) -> Output {
    logtr(&["check", "--curve", spec(file).to_str().unwrap(), "--suite", suite, "--budget", budget])
}

#[test]
fn lambert_logtr_has_poles_only_at_the_ramification_point() {
    let o = compute("lambert.json", "logtr", "1", "1");
    assert!(o.status.success());
    let doc = json(&o);
    assert_eq!(pole_points(&doc), vec!["1"]);
    assert_eq!(doc["mode"], "logtr");
    assert_eq!(doc["g"], 1);
    assert!(!doc["certificates"]["windows"].as_array().unwrap().is_empty());
}

#[test]
fn kappa_logtr_has_a_pole_at_minus_one() {
    let doc = json(&compute("kappa.json", "logtr", "1", "1"));
    assert!(pole_points(&doc).contains(&"-1".to_string()));
    // plain TR stays at the ramification point
    assert_eq!(pole_points(&json(&compute("kappa.json", "tr", "1", "1"))), vec!["1"]);
}

#[test]
fn malformed_rationals_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in [r#"{"x": {"rational": {"num": ["0.5"]}}, "y": {}}"#, r#"{"x": {"rational": {"num": [0.5]}}, "y": {}}"#, "not json"].iter().enumerate() {
        let p = dir.path().join(format!("bad{i}.json"));
        std::fs::write(&p, text).unwrap();
        let o = logtr(&["compute", "--curve", p.to_str().unwrap(), "--mode", "tr", "--g", "0", "--n", "3"]);
        assert_eq!(o.status.code(), Some(2), "{text}");
    }
}

#[test]
fn budget_and_stability_are_enforced() {
    assert_eq!(compute("lambert.json", "tr", "2", "3").status.code(), Some(4));
    assert_eq!(compute("lambert.json", "tr", "0", "2").status.code(), Some(2));
    let o = logtr(&["compute", "--curve", spec("lambert.json").to_str().unwrap(), "--mode", "tr", "--g", "2", "--n", "3", "--budget", "5"]);
    assert!(o.status.success());
}

#[test]
fn output_file_round_trips_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.json");
    let o = logtr(&["compute", "--curve", spec("kappa.json").to_str().unwrap(), "--mode", "logtr", "--g", "1", "--n", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(ResultDoc::parse(&text).unwrap().to_text(), text);
    assert!(!text.contains('.'), "no floats in the output");
}

#[test]
fn curve_hash_ignores_log_term_order() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    std::fs::write(&a, r#"{"x": {"log": [{"point": "-1", "coeff": "3"}, {"point": "0", "coeff": "-1"}]}, "y": {"rational": {"num": ["0", "1"]}}}"#).unwrap();
    std::fs::write(&b, r#"{"x": {"log": [{"point": "0", "coeff": "-1"}, {"point": "-1", "coeff": "3"}]}, "y": {"rational": {"num": ["0", "1"]}}}"#).unwrap();
    let run = |p: &Path| json(&logtr(&["compute", "--curve", p.to_str().unwrap(), "--mode", "tr", "--g", "0", "--n", "3"]));
    let (da, db) = (run(&a), run(&b));
    assert_eq!(da["curve_hash"], db["curve_hash"]);
    assert_eq!(da, db);
}

#[test]
fn cache_directory_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let file = spec("lambert.json");
    let args = ["compute", "--curve", file.to_str().unwrap(), "--mode", "tr", "--g", "0", "--n", "3"];
    let run = || Command::new(env!("CARGO_BIN_EXE_logtr")).args(args).env("LOGTR_CACHE_DIR", dir.path()).output().unwrap();
    let first = run();
    assert!(first.status.success());
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    // a marked entry proves the second run reads the cache
    let mut doc = ResultDoc::parse(&std::fs::read_to_string(&entries[0]).unwrap()).unwrap();
    doc.certificates = serde_json::json!({"windows": [], "u_budget": "cached"});
    std::fs::write(&entries[0], doc.to_text()).unwrap();
    let second = run();
    assert_eq!(json(&second)["certificates"]["u_budget"], "cached");
    assert_eq!(json(&second)["terms"], json(&first)["terms"]);
}

#[test]
fn hurwitz_oracle() {
    let o = logtr(&["oracle", "--hurwitz", "2", "2", "0"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "1/2");
    let o = logtr(&["oracle", "--hurwitz", "1", "1", "0"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "1");
    assert_eq!(logtr(&["oracle", "--hurwitz", "7", "7", "0"]).status.code(), Some(5));
    assert_eq!(logtr(&["oracle", "--hurwitz", "3", "2", "0"]).status.code(), Some(2));
}

#[test]
fn hodge_oracle_reports_consistent_genus_one_values() {
    let o = logtr(&["oracle", "--hodge"]);
    assert!(o.status.success());
    let t = json(&o);
    assert_eq!(t["psi_11"], "1/24");
    assert_eq!(t["lambda_11"], "1/24");
    assert_eq!(t["one_03"], "1");
    assert_eq!(t["consistent"], true);
}

#[test]
fn swap_suite_passes_on_lambert() {
    let o = check("lambert.json", "swap", "3");
    let r = json(&o);
    assert!(o.status.success(), "{r}");
    assert_eq!(r["results"].as_array().unwrap().len(), 7);
}

#[test]
fn closed_suite_matches_the_recursion() {
    for file in ["r_spin.json", "kappa_zeta.json"] {
        let o = check(file, "closed", "3");
        assert!(o.status.success(), "{file}: {}", json(&o));
    }
    // outside the y = z or y = log z charts the formula is refused
    assert_eq!(check("kappa.json", "closed", "2").status.code(), Some(3));
    assert_eq!(check("airy.json", "closed", "2").status.code(), Some(0));
}

#[test]
fn split_deformation_is_reported_as_a_failure_from_genus_one() {
    let o = check("bms3_split.json", "closed", "2");
    assert_eq!(o.status.code(), Some(1));
    for r in json(&o)["results"].as_array().unwrap() {
        assert_eq!(r["pass"], r["g"] == 0, "{r}");
    }
}

#[test]
fn remaining_suites_pass() {
    for (file, suite) in [("airy.json", "bridge"), ("kappa.json", "bridge"), ("kappa.json", "loops"), ("kappa.json", "projection"), ("kappa.json", "symmetry"), ("r_spin.json", "loops")] {
        let o = check(file, suite, "3");
        assert!(o.status.success(), "{file} {suite}: {}", String::from_utf8_lossy(&o.stdout));
    }
}
