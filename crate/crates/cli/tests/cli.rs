use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TRIANGLE: &str = r#"{"name":"triangle","nodes":["a","b","c"],"edges":[
{"u":"a","v":"b","capacity":1},{"u":"b","v":"c","capacity":1},{"u":"a","v":"c","capacity":1}]}"#;

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("telab-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("tri.json"), TRIANGLE).unwrap();
    std::fs::write(dir.join("tm.json"), r#"{"demands":[{"src":"a","dst":"c","demand":3}]}"#).unwrap();
    dir
}

fn telab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_telab")).current_dir(dir).args(args).output().unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn staged_commands_chain() {
    let dir = scratch("chain");
    assert!(telab(&dir, &["paths", "--topo", "tri.json", "--out", "paths.json"]).status.success());
    assert_eq!(json(&dir, "paths.json")["groups"].as_array().unwrap().len(), 6);
    let sel = ["select", "--topo", "tri.json", "--paths", "paths.json", "--limit", "100", "--out", "sel.json"];
    assert!(telab(&dir, &sel).status.success());
    let te = ["te", "--topo", "tri.json", "--paths", "paths.json", "--selection", "sel.json", "--tm", "tm.json", "--out", "te.json"];
    assert!(telab(&dir, &te).status.success());
    let alloc = json(&dir, "te.json");
    assert_eq!(alloc["phase"], "IV");

    let out = telab(&dir, &["mcf", "--topo", "tri.json", "--tm", "tm.json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["z_opt"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    let dir = scratch("codes");
    let code = |args: &[&str]| telab(&dir, args).status.code();
    assert_eq!(code(&["run", "--topo", "tri.json"]), Some(2));
    assert_eq!(code(&["mcf", "--topo", "missing.json", "--tm", "tm.json"]), Some(3));
    std::fs::write(dir.join("bad.json"), r#"{"nodes":["a"],"edges":[{"u":"a","v":"zz","capacity":1}]}"#).unwrap();
    assert_eq!(code(&["mcf", "--topo", "bad.json", "--tm", "tm.json"]), Some(4));
    assert_eq!(code(&["tmgen", "--topo", "tri.json", "--total", "5", "--out", "no/such/dir/tm.json"]), Some(6));

    let out = telab(&dir, &["mcf", "--topo", "missing.json", "--tm", "tm.json"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(serde_json::from_str::<serde_json::Value>(err.trim()).is_ok());
    std::fs::remove_dir_all(&dir).unwrap();
}
