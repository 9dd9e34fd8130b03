use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn lcmdil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcmdil")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Row-major real matrices to the on-disk `[re, im]` form.
fn rep_json(monoid: &str, dim: usize, gens: &[&[f64]]) -> Value {
    let gens: Vec<Vec<[f64; 2]>> = gens.iter().map(|g| g.iter().map(|&x| [x, 0.0]).collect()).collect();
    json!({ "monoid": monoid, "dim": dim, "generators": gens })
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

#[test]
fn check_zero_rep_passes() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "z.json", &rep_json("NA(2)", 2, &[&[0.0; 4], &[0.0; 4]]));
    let o = lcmdil(&["check", "--config", &f]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["overall"], true);
}

#[test]
fn check_rejects_non_contraction() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", &rep_json("NA(1)", 1, &[&[2.0]]));
    let o = lcmdil(&["check", "--config", &f]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("contraction"));
}

#[test]
fn malformed_json_is_structural() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{ not json").unwrap();
    let o = lcmdil(&["check", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed JSON"));
}

#[test]
fn check_reports_failing_subset_with_min_eigenvalue() {
    // nilpotent pair S = T = 0.9 E12
    let dir = tempfile::tempdir().unwrap();
    let n = [0.0, 0.9, 0.0, 0.0];
    let f = write(dir.path(), "n.json", &rep_json("NA(2)", 2, &[&n, &n]));
    let o = lcmdil(&["check", "--config", &f]);
    assert_eq!(code(&o), 2);
    let r = stdout_json(&o);
    let fam = r["regularity"]["family"].as_array().unwrap();
    let both = fam.iter().find(|e| e["subset"] == json!(["a", "b"])).unwrap();
    // I - 2·0.81 E11 + 0 has eigenvalues 1 - 1.62 and 1
    assert!((both["min_eigenvalue"].as_f64().unwrap() + 0.62).abs() < 1e-12);
    assert_eq!(both["pass"], false);
}

#[test]
fn run_config_overrides_and_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.json", &rep_json("NA(1)", 1, &[&[0.5]]));
    let cfg = write(dir.path(), "run.json", &json!({ "monoid": "NA(1)", "representation": "t.json", "L": 3 }));
    let o = lcmdil(&["dilate", "--config", &cfg, "--format", "text"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("overall: pass"));

    let wrong = write(dir.path(), "wrong.json", &json!({ "monoid": "F(2)", "representation": "t.json" }));
    assert_eq!(code(&lcmdil(&["check", "--config", &wrong])), 1);
    let zero_l = write(dir.path(), "zl.json", &json!({ "representation": "t.json", "L": 0 }));
    assert_eq!(code(&lcmdil(&["check", "--config", &zero_l])), 1);
}

#[test]
fn dilate_zero_contraction_gives_shift() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "t.json", &rep_json("NA(1)", 1, &[&[0.0]]));
    let out = dir.path().join("m.json");
    let o = lcmdil(&["dilate", "--config", &f, "--L", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let m: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    // shift on span{e, a, a², a³, a⁴}
    assert_eq!(m["model"]["space_dim"], 5);
    assert_eq!(m["model"]["provenance"], "gns");
    assert_eq!(m["report"]["overall"], true);
}

#[test]
fn dilate_unitary_is_rank_n() {
    let dir = tempfile::tempdir().unwrap();
    let (c, s) = (0.6, 0.8);
    let f = write(dir.path(), "u.json", &rep_json("NA(1)", 2, &[&[c, -s, s, c]]));
    let out = dir.path().join("m.json");
    assert_eq!(code(&lcmdil(&["dilate", "--config", &f, "--out", out.to_str().unwrap()])), 0);
    let m: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(m["model"]["space_dim"], 2);
}

#[test]
fn dilate_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    // doubly commuting diagonal pair
    let f = write(dir.path(), "d.json", &rep_json("NA(2)", 2, &[&[0.5, 0.0, 0.0, 0.2], &[0.3, 0.0, 0.0, 0.7]]));
    let out = dir.path().join("m.json");
    let o = lcmdil(&["dilate", "--config", &f, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report = stdout_json(&o);
    let nica = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "nica").unwrap();
    assert_eq!(nica["pass"], true);
    let v = lcmdil(&["verify", "--config", out.to_str().unwrap()]);
    assert_eq!(code(&v), 0);
    assert_eq!(stdout_json(&v)["overall"], true);

    // tampering with an operator entry is caught
    let mut m: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let x = m["model"]["ops"][0]["entries"][0][0].as_f64().unwrap();
    m["model"]["ops"][0]["entries"][0][0] = json!(x + 1e-4);
    let bad = write(dir.path(), "bad.json", &m);
    assert_eq!(code(&lcmdil(&["verify", "--config", &bad])), 2);
}

#[test]
fn verify_rejects_plain_representation() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "t.json", &rep_json("NA(1)", 1, &[&[0.5]]));
    assert_eq!(code(&lcmdil(&["verify", "--config", &f])), 1);
}

#[test]
fn ando_trivial_p() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", &rep_json("NA(2)", 2, &[&[0.5, 0.3, 0.0, 0.4], &[0.2, 0.12, 0.0, 0.16]]));
    let out = dir.path().join("r.json");
    let o = lcmdil(&["ando", "--config", &f, "--L", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["mode"], "cartesian");
    assert_eq!(r["valid_degree"], 2);
    assert!(r["u"]["entries"].is_array());
    assert_eq!(code(&lcmdil(&["verify", "--config", out.to_str().unwrap()])), 0);
}

#[test]
fn ando_names_failing_subset() {
    let dir = tempfile::tempdir().unwrap();
    // S1 = T = 0.9 E12, S2 = 0: Z_{c} - S1 Z_{c} S1* = diag(0.19 - 0.81, 1)
    let n = [0.0, 0.9, 0.0, 0.0];
    let f = write(dir.path(), "v.json", &rep_json("X(NA(2),NA(1))", 2, &[&n, &[0.0; 4], &n]));
    let o = lcmdil(&["ando", "--config", &f, "--L", "3"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("S1") && err.contains("F = {a}"), "{err}");
}

#[test]
fn ando_mode_must_match_monoid() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", &rep_json("NA(2)", 1, &[&[0.5], &[0.5]]));
    assert_eq!(code(&lcmdil(&["ando", "--config", &f, "--mode", "free"])), 1);
}

#[test]
fn ando_free_row_condition_instance() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", &rep_json("*(NA(2),F(2))", 1, &[&[0.3], &[0.2], &[0.4], &[0.3]]));
    let o = lcmdil(&["ando", "--config", &f, "--L", "3", "--m", "2", "--format", "text"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("orthogonal-ranges-v2"));
}

#[test]
fn sample_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = lcmdil(&["sample", "--monoid", "NA(2)", "--dim", "2", "--seed", "42"]);
    let b = lcmdil(&["sample", "--monoid", "NA(2)", "--dim", "2", "--seed", "42"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = lcmdil(&["sample", "--monoid", "NA(2)", "--dim", "2", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);

    let p = dir.path().join("s.json");
    fs::write(&p, &a.stdout).unwrap();
    let chk = lcmdil(&["check", "--config", p.to_str().unwrap()]);
    assert_ne!(code(&chk), 1, "sampled commuting family must validate");
}

#[test]
fn sample_batch_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("batch");
    let o = lcmdil(&["sample", "--monoid", "X(NA(1),F(2))", "--dim", "3", "--seed", "7", "--count", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let mut names: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["sample-000.json", "sample-001.json", "sample-002.json", "sample-003.json", "sample-004.json"]);
    assert_eq!(code(&lcmdil(&["sample", "--monoid", "F(2)", "--count", "3"])), 1);
    assert_eq!(code(&lcmdil(&["sample", "--monoid", "NA(2)", "--family", "independent"])), 1);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "t.json", &rep_json("NA(2)", 2, &[&[0.5, 0.1, 0.0, 0.2], &[0.25, 0.05, 0.0, 0.1]]));
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    lcmdil(&["dilate", "--config", &f, "--out", a.to_str().unwrap()]);
    lcmdil(&["dilate", "--config", &f, "--out", b.to_str().unwrap()]);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}
