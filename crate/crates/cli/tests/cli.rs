use std::path::Path;
use std::process::{Command, Output};

fn maskcov(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maskcov"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) {
    std::fs::write(dir.join("cfg.json"), body).unwrap();
}

const SMALL: &str = r#"{"sigma_spec":{"kind":"ar1","rho":0.4},"mask_spec":{"kind":"banded","k":1},
"n_grid":[20,40,80],"p":10,"replicates":6,"master_seed":9}"#;

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    let a = maskcov(&["simulate", "--config", "cfg.json", "--out", "a.csv"], dir.path());
    let b = maskcov(&["simulate", "--config", "cfg.json", "--out", "b.csv"], dir.path());
    assert!(a.status.success() && b.status.success(), "{a:?}");
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 3 * 6);

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["trials"], 18);
    assert_eq!(meta["refined_violations"], 0);
    assert_eq!(meta["policy"]["minor_envelope_factor"], 1.3);
    assert_eq!(meta["config"]["replicates"], 6);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    maskcov(&["simulate", "--config", "cfg.json", "--out", "a.csv"], dir.path());
    let out = maskcov(
        &["simulate", "--config", "cfg.json", "--out", "b.csv", "--seed", "10"],
        dir.path(),
    );
    assert!(out.status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_ne!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    let meta = std::fs::read_to_string(dir.path().join("b.meta.json")).unwrap();
    assert!(meta.contains("\"master_seed\": 10"));
}

#[test]
fn json_output_and_decoupled_mode() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    let out = maskcov(
        &["simulate", "--config", "cfg.json", "--out", "r.json", "--decoupled"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().all(|r| r["decoupled"].as_f64().unwrap() > 0.0));
}

#[test]
fn scaling_reads_simulate_output() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    maskcov(&["simulate", "--config", "cfg.json", "--out", "r.csv"], dir.path());
    let out = maskcov(&["scaling", "--in", "r.csv", "--axis", "n", "--out", "s.json"], dir.path());
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(report["axis"], "n");
    assert_eq!(report["points"], 3);
    assert!(report["slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn scaling_rejects_too_few_points() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        r#"{"sigma_spec":{"kind":"identity"},"mask_spec":{"kind":"banded","k":1},"n_grid":[20,40],"p":6,"replicates":3}"#,
    );
    maskcov(&["simulate", "--config", "cfg.json", "--out", "r.csv"], dir.path());
    let out = maskcov(&["scaling", "--in", "r.csv", "--axis", "n", "--out", "s.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn norms_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.csv"), "1,1,0\n1,1,0\n0,0,1\n").unwrap();
    let out = maskcov(&["norms", "--matrix", "m.csv"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["spectral"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((v["norm_one_two"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(v["mask"]["max_col_nnz"], 2);

    std::fs::write(dir.path().join("r.csv"), "3,0,0\n0,0,4\n").unwrap();
    let out = maskcov(&["norms", "--matrix", "r.csv"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["spectral"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert!(v["mask"].is_null());
}

#[test]
fn verify_lemmas_writes_one_line_per_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = maskcov(
        &["verify-lemmas", "--seed", "4", "--trials", "10000", "--out", "l.jsonl"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("l.jsonl")).unwrap();
    let reports: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(reports.len() > 10);
    assert!(reports.iter().all(|r| r["passed"] == true));
    for prefix in ["reg_norm", "net_norm", "decoupling", "concentration", "sigma_x_mean", "sigma_x_lipschitz"] {
        assert!(
            reports.iter().any(|r| r["lemma"].as_str().unwrap().starts_with(prefix)),
            "missing {prefix}"
        );
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // validation: ar1 rho out of range
    write_config(
        dir.path(),
        r#"{"sigma_spec":{"kind":"ar1","rho":1.5},"mask_spec":{"kind":"banded","k":1},"n_grid":[10],"p":4}"#,
    );
    let out = maskcov(&["simulate", "--config", "cfg.json", "--out", "r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // unknown config field
    write_config(dir.path(), &SMALL.replace("\"p\":10", "\"p\":10,\"extra\":1"));
    let out = maskcov(&["simulate", "--config", "cfg.json", "--out", "r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // indefinite custom covariance
    std::fs::write(dir.path().join("sigma.csv"), "1,2\n2,1\n").unwrap();
    write_config(
        dir.path(),
        r#"{"sigma_spec":{"kind":"custom","path":"sigma.csv"},"mask_spec":{"kind":"banded","k":1},"n_grid":[10],"p":2}"#,
    );
    let out = maskcov(&["simulate", "--config", "cfg.json", "--out", "r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    // too few trials for the decoupling check
    let out = maskcov(&["verify-lemmas", "--trials", "100", "--out", "l.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = maskcov(&["norms"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
