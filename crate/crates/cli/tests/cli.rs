use std::process::{Command, Output};

use serde_json::Value;

fn hfz2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfz2"))
        .args(args)
        .env_remove("HFZ2_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = hfz2(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn triples(rows: &Value) -> Vec<(i64, i64, i64, u64)> {
    let mut v: Vec<_> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let g = |k: &str| r[k].as_i64().unwrap();
            (g("i"), g("j"), g("x"), r["dim"].as_u64().unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn unknot_homfly_json() {
    let v = json(&["homfly", "--braid", "1;", "--cutoff", "3", "--format", "json"]);
    assert_eq!(v["input"]["components"], 1);
    let expected = vec![
        (-1, -1, 2, 1), (-1, -1, 4, 1), (-1, -1, 6, 1),
        (1, -1, 0, 1), (1, -1, 2, 1), (1, -1, 4, 1), (1, -1, 6, 1),
    ];
    assert_eq!(triples(&v["tables"]["homfly"]), expected);
}

#[test]
fn detect_unlink_verdicts() {
    let v = json(&["detect-unlink", "--braid", "3;", "--cutoff", "6", "--format", "json"]);
    assert_eq!(v["reports"]["detection"]["verdict"], "unlink_consistent");
    assert_eq!(v["reports"]["detection"]["m"], 3);

    let v = json(&["detect-unlink", "--braid", "2;1,1", "--cutoff", "4", "--format", "json"]);
    let d = &v["reports"]["detection"];
    assert_eq!(d["verdict"], "not_unlink");
    assert_eq!(d["witness"]["x"], -2);
    assert_eq!(d["witness"]["found"], 1);
}

#[test]
fn khovanov_trefoil_csv() {
    let out = hfz2(&["khovanov", "--braid", "2;1,1,1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("table,h,q,dim"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(
        rows,
        ["khovanov,0,1,1", "khovanov,0,3,1", "khovanov,2,5,1", "khovanov,2,7,1", "khovanov,3,7,1", "khovanov,3,9,1"]
    );
}

#[test]
fn checks_succeed() {
    for cmd in ["euler-check", "markov-check", "verify-homotopy"] {
        let out = hfz2(&[cmd, "--braid", "2;1,1,1", "--cutoff", "2"]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["e2", "--braid", "2;1,1", "--cutoff", "3", "--format", "json"];
    assert_eq!(hfz2(&args).stdout, hfz2(&args).stdout);
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let base = ["homfly", "--braid", "2;1,1,1", "--cutoff", "3", "--format", "json"];
    let fresh = json(&[&base[..], &["--no-cache"]].concat());
    let first = json(&[&base[..], &["--cache-dir", d]].concat());
    assert!(std::fs::read_dir(dir.path()).unwrap().count() > 0);
    let second = json(&[&base[..], &["--cache-dir", d]].concat());
    assert_eq!(fresh["tables"], first["tables"]);
    assert_eq!(first["tables"], second["tables"]);
}

#[test]
fn usage_errors_exit_1() {
    for args in [
        &["homfly", "--braid", "2;3"][..],
        &["homfly", "--braid", "nonsense"],
        &["verify-homotopy", "--braid", "2;1,1,1", "--component", "2"],
        &["khovanov", "--braid", "2;1,1,1", "--q-max", "5"],
        &["frobnicate"],
    ] {
        assert_eq!(hfz2(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn resource_limits_exit_2() {
    let out = hfz2(&["homfly", "--braid", "2;1,1,1", "--max-slice-dim", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let long = format!("2;{}", vec!["1"; 21].join(","));
    assert_eq!(hfz2(&["jones", "--braid", &long]).status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    assert_eq!(hfz2(&["--help"]).status.code(), Some(0));
}
