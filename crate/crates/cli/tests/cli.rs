use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn critval(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critval")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cantor_cloud_has_32_points() {
    let tmp = tempfile::tempdir().unwrap();
    let o = critval(&["attractor", "--ifs", "cantor", "--eps", "0.01", "--svg", "--out", "o"], tmp.path());
    assert!(o.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("o/cloud.csv")).unwrap();
    assert_eq!(csv.lines().count(), 33);
    assert!(tmp.path().join("o/attractor.svg").is_file());
    let v = json(&tmp.path().join("o/attractor.json"));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["result"]["depth"], 5);
}

#[test]
fn ifs_from_spec_file() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = r#"{"maps": [
        {"ratio": "1/3", "rotation": {"pi_coeff": "0", "remainder": "0"}, "translation": ["0", "0"]},
        {"ratio": "1/3", "rotation": {"pi_coeff": "0", "remainder": "0"}, "translation": ["2/3", "0"]}],
        "labels": [1, 2]}"#;
    std::fs::write(tmp.path().join("cantor.json"), spec).unwrap();
    let o = critval(&["attractor", "--ifs", "cantor.json", "--eps", "1/100", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let built = critval(&["attractor", "--ifs", "cantor", "--eps", "1/100", "--out", "p"], tmp.path());
    assert!(built.status.success());
    let a = std::fs::read(tmp.path().join("o/cloud.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("p/cloud.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn kappa_example() {
    let tmp = tempfile::tempdir().unwrap();
    let o = critval(&["kappa-search", "--a", "pi/2", "--b", "3pi/2", "--k0", "1", "--out", "o"], tmp.path());
    assert!(o.status.success());
    let v = json(&tmp.path().join("o/kappa.json"));
    let r = &v["result"]["result"];
    assert_eq!(r["k"], 2);
    assert_eq!(r["l"], 1);
    assert_eq!(r["kappa"]["pi_coeff"], "1");
    assert_eq!(r["kappa"]["remainder"], "7/2000000000");
    assert_eq!(v["result"]["identities_exact"], true);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    // Unknown config key.
    std::fs::write(p.join("run.json"), r#"{"precision_bits": 128, "colour": "red"}"#).unwrap();
    assert_eq!(critval(&["--config", "run.json", "kappa-search", "--a", "0", "--b", "1"], p).status.code(), Some(2));
    // Unknown IFS.
    assert_eq!(critval(&["attractor", "--ifs", "nope"], p).status.code(), Some(2));
    // q outside (0, 1/4).
    assert_eq!(critval(&["kappa-search", "--a", "0", "--b", "1", "--q", "1/2"], p).status.code(), Some(2));
    // Node budget.
    assert_eq!(critval(&["attractor", "--ifs", "sierpinski", "--eps", "1/100000", "--cap", "100", "--out", "o"], p).status.code(), Some(3));
    // Search bound.
    let o = critval(&["refine", "--steps", "2", "--max-k", "1000", "--resume", "s.json", "--out", "o"], p);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    std::fs::write(p.join("run.json"), r#"{"ifs": "cantor", "precision_bits": 128, "out": "cfg-out"}"#).unwrap();
    let o = critval(&["--config", "run.json", "attractor"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&p.join("cfg-out/attractor.json"));
    assert_eq!(v["config"]["precision_bits"], 128);
    let o = critval(&["--config", "run.json", "--bits", "96", "--out", "flag-out", "attractor"], p);
    assert!(o.status.success());
    assert_eq!(json(&p.join("flag-out/attractor.json"))["config"]["precision_bits"], 96);
}

#[test]
fn resume_matches_direct_run() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    assert!(critval(&["refine", "--steps", "1", "--bits", "512", "--resume", "r.json", "--out", "o1"], p).status.success());
    assert!(critval(&["refine", "--steps", "2", "--bits", "512", "--resume", "r.json", "--out", "o2"], p).status.success());
    assert!(critval(&["refine", "--steps", "2", "--bits", "512", "--resume", "d.json", "--out", "o3"], p).status.success());
    assert_eq!(std::fs::read(p.join("r.json")).unwrap(), std::fs::read(p.join("d.json")).unwrap());
    let v = json(&p.join("o2/refine.json"));
    assert_eq!(v["result"]["all_hold"], true);
    assert_eq!(v["result"]["k"], serde_json::json!([2, 628318532]));

    // The stated family bound is not met; artifacts are still written.
    let o = critval(&["critical-family", "--state", "r.json", "--n", "2", "--bits", "512", "--out", "f"], p);
    assert_eq!(o.status.code(), Some(4));
    let fam = json(&p.join("f/family.json"));
    assert_eq!(fam["result"]["separations"].as_array().unwrap().len(), 6);
    assert_eq!(fam["result"]["all_distinct"], true);

    let o = critval(&["certificate", "--state", "r.json", "--prefix=-1", "--bits", "512", "--out", "c"], p);
    assert!(o.status.success());
    assert_eq!(json(&p.join("c/certificate.json"))["result"]["status"], "TOUCHING_CERTIFIED");
}

#[test]
fn nonconformant_stamp() {
    let tmp = tempfile::tempdir().unwrap();
    let o = critval(&["kappa-search", "--a", "pi/2", "--b", "3pi/2", "--q", "1/100", "--out", "o"], tmp.path());
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("NONCONFORMANT"));
    assert_eq!(json(&tmp.path().join("o/kappa.json"))["nonconformant"], true);
    let o = critval(&["kappa-search", "--a", "pi/2", "--b", "3pi/2", "--out", "p"], tmp.path());
    assert!(!String::from_utf8_lossy(&o.stdout).contains("NONCONFORMANT"));
}

#[test]
fn no_bare_floats_in_json() {
    let tmp = tempfile::tempdir().unwrap();
    let o = critval(&["hull-census", "--ifs", "rotation:1/5:1", "--max-depth", "4", "--out", "o"], tmp.path());
    assert!(o.status.success());
    fn walk(v: &Value) -> bool {
        match v {
            Value::Number(n) => !n.is_f64(),
            Value::Array(a) => a.iter().all(walk),
            Value::Object(o) => o.values().all(walk),
            _ => true,
        }
    }
    assert!(walk(&json(&tmp.path().join("o/census.json"))));
}
