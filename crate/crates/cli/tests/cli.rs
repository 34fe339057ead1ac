use std::io::Write;
use std::process::{Command, Output};

fn treeshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeshift"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn basic_set(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

const DOMINANT: &str = "signature: d=2 k=2\nblock: 1 -> 1 1\nblock: 1 -> 2 2\nblock: 2 -> 2 2\n";

#[test]
fn classify_reports_ln2_with_vectors() {
    let f = basic_set(DOMINANT);
    let o = treeshift(&["classify", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["value"], "ln 2");
    assert_eq!(v["justification"], "dominant-type");
    assert_eq!(v["v_F"], serde_json::json!([1, 0, 0, 1]));
    assert_eq!(v["v_G"], serde_json::json!([0, 0, 0, 1]));
}

#[test]
fn exact_counts_match_hand_computation() {
    let f = basic_set(DOMINANT);
    let o = treeshift(&[
        "count",
        f.path().to_str().unwrap(),
        "--backend",
        "exact",
        "--n",
        "5",
        "--out",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "n,total,a1,a2\n2,3,2,1\n3,6,5,1\n4,27,26,1\n5,678,677,1\n");
    let oracle = treeshift(&[
        "count",
        f.path().to_str().unwrap(),
        "--backend",
        "oracle",
        "--n",
        "5",
        "--out",
        "csv",
    ]);
    assert_eq!(stdout(&oracle), stdout(&o));
}

#[test]
fn sweep_has_a_row_per_mask_and_is_deterministic() {
    let a = treeshift(&["sweep", "--d", "2", "--k", "2"]);
    let b = treeshift(&["sweep", "--d", "2", "--k", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("basicset_bitmask,v_F,v_G,verdict,justification,h_numeric")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 256);
    for row in rows {
        assert!(!row.contains(",undetermined,"), "{row}");
    }
}

#[test]
fn realize_golden_ratio() {
    let o = treeshift(&["realize", "--poly", "x^2 - x - 1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((v["ln_rho"].as_f64().unwrap() - golden.ln()).abs() < 1e-12);
    assert!(v["abs_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["k"], 3);
}

#[test]
fn realize_emits_a_loadable_basic_set() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.txt");
    let o = treeshift(&[
        "realize",
        "--poly",
        "x^3 - x^2 - x - 1",
        "--emit",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let c = treeshift(&["entropy", path.to_str().unwrap(), "--out", "json", "--n", "60"]);
    assert_eq!(c.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    let tribonacci = 1.839_286_755_214_161_f64;
    assert!((v["estimate"]["value"].as_f64().unwrap() - tribonacci.ln()).abs() < 1e-6);
}

#[test]
fn derive_round_trips_through_both_forms() {
    let f = basic_set(DOMINANT);
    let path = f.path().to_str().unwrap();
    for fmt in ["text", "json"] {
        let d = treeshift(&["derive", path, "--out", fmt]);
        assert_eq!(d.status.code(), Some(0));
        let snre = basic_set(&stdout(&d));
        let back = treeshift(&["derive", "--from-snre", snre.path().to_str().unwrap()]);
        assert_eq!(back.status.code(), Some(0), "{}", String::from_utf8_lossy(&back.stderr));
        assert_eq!(stdout(&back), DOMINANT);
    }
}

#[test]
fn log2_rescales_entropy_only() {
    let f = basic_set(DOMINANT);
    let o = treeshift(&["entropy", f.path().to_str().unwrap(), "--out", "json", "--log2"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["estimate"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["estimate"]["unit"], "bits");
}

#[test]
fn boundary_check_is_keyed_by_kind() {
    let f = basic_set(DOMINANT);
    let o = treeshift(&["boundary-check", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["neumann"]["relation"], "equal");
    assert_eq!(v["dirichlet:2"]["relation"], "equal");
    assert_eq!(v["periodic"]["relation"], "unknown");
}

#[test]
fn probe_is_seeded() {
    let a = treeshift(&["probe", "--seed", "7"]);
    let b = treeshift(&["probe", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(treeshift(&["--help"]).status.code(), Some(0));
    assert_eq!(treeshift(&["classify"]).status.code(), Some(1));
    assert_eq!(treeshift(&["classify", "/no/such/file"]).status.code(), Some(1));

    let bad = basic_set("signature: d=2 k=2\nblock: 1 -> 3 1\n");
    let o = treeshift(&["validate", bad.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let f = basic_set(DOMINANT);
    let o = treeshift(&["count", f.path().to_str().unwrap(), "--backend", "exact", "--n", "60"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));

    let o = treeshift(&["count", f.path().to_str().unwrap(), "--precision", "20"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn general_signature_classification() {
    let f = basic_set(
        "signature: d=2 k=3\nblock: 1 -> 1 1\nblock: 1 -> 1 2\nblock: 1 -> 1 3\nblock: 2 -> 1 2\nblock: 2 -> 1 3\nblock: 3 -> 1 3\n",
    );
    let o = treeshift(&["classify", f.path().to_str().unwrap(), "--out", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("ln 2 (dominant-vector)"));
}
