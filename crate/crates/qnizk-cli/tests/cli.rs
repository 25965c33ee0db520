use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn qnizk(args: &[&str]) -> Output {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    Command::new(env!("CARGO_BIN_EXE_qnizk")).args(args).env("QNIZK_FIXTURES", fixtures).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn keys(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    fn walk(v: &Value, path: String, out: &mut Vec<String>) {
        match v {
            Value::Object(m) => m.iter().for_each(|(k, v)| walk(v, format!("{path}.{k}"), out)),
            Value::Array(a) => a.iter().for_each(|v| walk(v, format!("{path}[]"), out)),
            _ => out.push(path),
        }
    }
    walk(v, String::new(), &mut out);
    out.sort();
    out.dedup();
    out
}

#[test]
fn honest_run_accepts_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("run.json");
    let rec = rec.to_str().unwrap();
    let out = qnizk(&["run", "--instance", "1", "--seed", "42", "--out", rec]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["decision"], "accept");

    let again = qnizk(&["run", "--replay", rec]);
    assert_eq!(again.status.code(), Some(0), "{}", String::from_utf8_lossy(&again.stderr));
    assert_eq!(stdout_json(&again)["replay"], "identical");

    // A tampered record no longer reproduces.
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(rec).unwrap()).unwrap();
    v["seed"] = Value::from(43);
    std::fs::write(rec, v.to_string()).unwrap();
    assert_eq!(qnizk(&["run", "--replay", rec]).status.code(), Some(3));
}

#[test]
fn cheating_prover_exits_reject() {
    let out = qnizk(&["run", "--instance", "1", "--seed", "3", "--steane-level", "1", "--mode", "adversary:forged-proof"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["decision"], "reject");
}

#[test]
fn input_errors_exit_2() {
    for args in [
        vec!["reduce", "--circuit", "bad_gate"],
        vec!["run", "--instance", "1"],
        vec!["run", "--seed", "1"],
        vec!["run", "--instance", "1", "--seed", "1", "--mode", "adversary:nobody"],
        vec!["run", "--instance", "1", "--seed", "1", "--steane-level", "3"],
        vec!["run", "--instance", "1", "--seed", "1", "--prover", "a1"],
        vec!["stats", "--instance", "1", "--seed", "1", "--trials", "0"],
    ] {
        let out = qnizk(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn simulated_record_has_real_schema() {
    let dir = tempfile::tempdir().unwrap();
    let (real, sim) = (dir.path().join("real.json"), dir.path().join("sim.json"));
    for (mode, path) in [("honest", &real), ("zk-sim", &sim)] {
        let out = qnizk(&["run", "--instance", "1", "--seed", "8", "--mode", mode, "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let load = |p: &PathBuf| -> Value { serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap() };
    let (a, b) = (load(&real), load(&sim));
    assert_eq!(keys(&a["transcripts"]), keys(&b["transcripts"]));
    assert_eq!(a["transcripts"][0]["parties"], b["transcripts"][0]["parties"]);
}

#[test]
fn reduce_reports_bound_and_dumps_terms() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("h.json");
    let out = qnizk(&["reduce", "--circuit", "eps", "--out", dump.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["bound_holds"], true);
    assert!(v["locality"].as_u64().unwrap() <= 5);
    let h: Value = serde_json::from_str(&std::fs::read_to_string(dump).unwrap()).unwrap();
    assert_eq!(h["terms"].as_array().unwrap().len() as u64, v["counts"]["total"].as_u64().unwrap());
}

#[test]
fn stats_are_deterministic_across_thread_counts() {
    let base = ["stats", "--instance", "1", "--seed", "5", "--trials", "40", "--steane-level", "1", "--mode", "extract-aoqk"];
    let one = qnizk(&[&base[..], &["--jobs", "1"]].concat());
    let two = qnizk(&[&base[..], &["--jobs", "2"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, two.stdout);
    let v = stdout_json(&one);
    assert_eq!(v["acceptance"]["accepted"], 40);
    assert_eq!(v["extraction"]["bot"], 0);
    assert!(v["extraction"]["mean_energy"].as_f64().unwrap() < 1e-9);
}
