use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfim-lab")).current_dir(dir).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const SCAN: &str = r#"
scenario = "entropy-scan"
[[profiles]]
id = "h2"
J = 1.0
family = "homogeneous"
h = 2.0
[scan]
m = [0]
L = { from = 1, to = 4 }
"#;

#[test]
fn scan_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "scan.toml", SCAN);
    let out = run(dir.path(), &["entropy-scan", "--config", "scan.toml", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("profile_id,m,L,J,entropy_bits,schmidt_1,residual"));
    assert_eq!(lines.next().unwrap().split(',').nth(3), Some("1.00000000000e0"));
    assert_eq!(csv.lines().count(), 5);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["profiles"][0]["points"], 4);
    assert!(!summary.to_string().contains("time"));
}

#[test]
fn failed_points_keep_completed_rows() {
    let dir = tempfile::tempdir().unwrap();
    // L = 14 exceeds the block limit of the entropy solver.
    write(dir.path(), "scan.toml", &SCAN.replace("to = 4", "to = 14"));
    let out = run(dir.path(), &["entropy-scan", "--config", "scan.toml", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 15);
    assert!(csv.lines().last().unwrap().contains("NaN"));
    assert!(!csv.lines().nth(13).unwrap().contains("NaN"));
}

#[test]
fn config_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "scan.toml", SCAN);
    write(d, "bad.toml", "scenario = \"entropy-scan\"\n[scan]\nm = []\nL = [1]\n");
    let mc = "scenario = \"mc-compare\"\n[[profiles]]\nid = \"p\"\nJ = 1.0\nfamily = \"homogeneous\"\nh = 1.0\n\
              [mc]\nm = 0\nL = 1\nbeta = [1.0]\nsweeps = 2000\nburn_in = 10\n";
    write(d, "mc.toml", mc);
    for args in [
        vec!["entropy-scan", "--config", "missing.toml", "--out", "x.csv"],
        vec!["entropy-scan", "--config", "bad.toml", "--out", "x.csv"],
        vec!["entropy-scan", "--config", "scan.toml"],
        vec!["entropy-scan", "--config", "scan.toml", "--out", "x.csv", "--max-n", "3"],
        vec!["mc-compare", "--config", "scan.toml"],
        vec!["mc-compare", "--config", "mc.toml"],
    ] {
        let out = run(d, &args);
        assert_eq!(out.status.code(), Some(3), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(d, &["mc-compare", "--config", "mc.toml", "--seed", "4", "--out", "mc.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("mc.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 4);
    let counts = report["comparisons"][0]["estimate"]["counts"].as_object().unwrap();
    assert!(counts.contains_key("+-"));
}

#[test]
fn uniformity_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let scan = SCAN.replace("m = [0]", "m = [2]");
    write(d, "a.toml", &scan);
    write(d, "b.toml", &scan.replace("h = 2.0", "h = 0.5"));
    for (cfg, csv) in [("a.toml", "a.csv"), ("b.toml", "b.csv")] {
        assert!(run(d, &["entropy-scan", "--config", cfg, "--out", csv]).status.success());
    }
    let out = run(d, &["uniformity", "--bounded", "a.csv", "--critical", "b.csv", "--out", "u.json"]);
    assert_eq!(out.status.code(), Some(0));
    let u: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("u.json")).unwrap()).unwrap();
    assert!(u["slope_b"].as_f64().unwrap() > u["slope_a"].as_f64().unwrap());
    let out = run(d, &["uniformity", "--bounded", "a.csv", "--critical", "missing.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn kp_search_writes_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "kp.toml", "scenario = \"kp-search\"\n[kp]\nJ = 0.1\nC1 = 1.0\nK = 1\n");
    let out = run(d, &["kp-search", "--config", "kp.toml", "--certificate-out", "cert.json"]);
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("cert.json")).unwrap()).unwrap();
    assert_eq!(cert["found"], true);
    assert!(cert["certificate"]["assumptions"].as_array().unwrap().len() >= 5);
    assert!(cert["certificate"]["ledger"]["ln_b3"].is_number());
}
