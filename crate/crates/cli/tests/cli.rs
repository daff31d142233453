use std::path::Path;
use std::process::{Command, Output};

use abaclab::datasets::bundled_source;
use abaclab::exchange::import_canonical;
use abaclab::parse_policy;

fn abaclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abaclab"))
        .args(args)
        .env_remove("ABACLAB_DATA")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn stats_json() {
    let o = abaclab(&["stats", "university", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["perm"], 168);
    assert_eq!(v["sub"], 22);
}

#[test]
fn stats_from_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.abac", bundled_source("healthcare").unwrap());
    let o = abaclab(&["--format", "csv", "stats", &f]);
    assert_eq!(stdout(&o), "sub,res,uAttr,rAttr,rule,perm\r\n21,16,6,7,6,43\r\n");
}

#[test]
fn eval_empty_rules_lists_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.abac", "userAttrib(a, g=x)\nresourceAttrib(r, g=x)\n");
    let o = abaclab(&["eval", &f, "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["total"], 0);
    assert_eq!(v["permissions"], serde_json::json!([]));
}

#[test]
fn eval_single_decision() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "p.abac",
        "userAttrib(a, g=x)\nresourceAttrib(r, g=x)\nrule(; ; {read}; g = g)\n",
    );
    let o = abaclab(&["eval", &f, "--user", "a", "--res", "r", "--act", "read", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v, serde_json::json!({"permitted": true, "matchingRules": [1]}));
    let o = abaclab(&["eval", &f, "--user", "a", "--res", "r", "--act", "write"]);
    assert!(stdout(&o).starts_with("deny"));
    let o = abaclab(&["eval", &f, "--user", "zz", "--res", "r", "--act", "read"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(abaclab(&[]).status.code(), Some(1));
    assert_eq!(abaclab(&["stats"]).status.code(), Some(1));
    assert_eq!(abaclab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(abaclab(&["--help"]).status.code(), Some(0));
    assert_eq!(abaclab(&["stats", "/no/such/file.abac"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.abac", "rule(");
    let o = abaclab(&["stats", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    let o = abaclab(&["loggen", "healthcare", "-n", "5", "--permit-ratio", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(abaclab(&["gen", "payroll"]).status.code(), Some(1));
}

#[test]
fn loggen_is_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = abaclab(&[
            "loggen", "university", "-n", "200", "--permit-ratio", "0.25", "--over", "0.1",
            "--under", "0.05", "--seed", "99", "--emit-truth", "-o", out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(text).unwrap().lines().count(), 201);

    let failed = dir.path().join("never.csv");
    let o = abaclab(&[
        "loggen", "healthcare", "-n", "1000", "--permit-ratio", "1", "--unique", "-o",
        failed.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!failed.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn check_file() {
    let dir = tempfile::tempdir().unwrap();
    let reqs = write(dir.path(), "req.csv", "user,resource,action\nnurse1,hr_pat1,addItem\npat1,hr_pat1,fly\n");
    let o = abaclab(&["check", "healthcare", &reqs, "--format", "csv"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("user,resource,action,decision,matching_rules"));
    assert!(lines.next().unwrap().starts_with("nurse1,hr_pat1,addItem,permit,"));
    assert_eq!(lines.next(), Some("pat1,hr_pat1,fly,deny,"));
}

#[test]
fn coverage_with_external_rules() {
    let dir = tempfile::tempdir().unwrap();
    let rules = write(dir.path(), "x.rules", "rule(position in {nurse}; ; {read}; )\n");
    let o = abaclab(&["coverage", "healthcare", "--rules", &rules, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["grantedCount"], 3 * 16);
    let o = abaclab(&["coverage", "university", "--format", "csv"]);
    assert_eq!(stdout(&o).lines().count(), 11);
}

#[test]
fn convert_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("u.json");
    assert!(abaclab(&["convert", "university", "--to", "canonical", "-o", json.to_str().unwrap()]).status.success());
    let p = import_canonical(&std::fs::read(&json).unwrap()).unwrap();
    let orig = parse_policy(bundled_source("university").unwrap(), "university").unwrap();
    assert_eq!(p, orig);
    let o = abaclab(&["stats", json.to_str().unwrap(), "--format", "json"]);
    assert_eq!(serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["perm"], 168);

    let out = dir.path().join("csv");
    assert!(abaclab(&["convert", "university", "--to", "csv", "-o", out.to_str().unwrap()]).status.success());
    let users = std::fs::read_to_string(out.join("users.csv")).unwrap();
    assert_eq!(users.lines().count(), 23);
    let rules = std::fs::read_to_string(out.join("rules.abac")).unwrap();
    assert_eq!(rules.lines().count(), 10);
}

#[test]
fn gen_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", "nEmployees = 20\nnCustomers = 10\nnAdmins = 2\n");
    let out = dir.path().join("e.abac");
    let o = abaclab(&["gen", "edocument", "--config", &cfg, "--seed", "4", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = parse_policy(&std::fs::read_to_string(&out).unwrap(), "e").unwrap();
    assert_eq!(p.users().len(), 32);
    assert_eq!(p.resources().len(), 300);

    let bad = write(dir.path(), "bad.toml", "nWidgets = 3\n");
    let o = abaclab(&["gen", "workforce", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nWidgets"));
}

#[test]
fn data_dir_env_overrides_bundled_names() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "university.abac", "userAttrib(a, g=x)\n");
    let o = Command::new(env!("CARGO_BIN_EXE_abaclab"))
        .args(["stats", "university", "--format", "json"])
        .env("ABACLAB_DATA", dir.path())
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["sub"], 1);
}

#[test]
fn table_outputs() {
    let o = abaclab(&["heatmap", "university"]);
    assert!(stdout(&o).lines().next().unwrap().starts_with("rule"));
    let o = abaclab(&["resource-access", "university"]);
    assert!(stdout(&o).starts_with("most accessible\n"));
    let o = abaclab(&["validate", "university"]);
    assert!(o.status.success());
}
