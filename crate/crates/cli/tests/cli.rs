use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fracdiff"));
    c.env_remove("FRACDIFF_THREADS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run_config(name: &str, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(extra)
        .arg("run")
        .arg("--config")
        .arg(configs().join(name))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_file(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn weyl_beta_one_reproduces_normal_diffusion() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("weyl_beta1.json", dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = json_file(&dir.path().join("fit.json"));
    assert!((fit["alpha"].as_f64().unwrap() - 1.0).abs() < 1e-3, "{fit}");
    assert!((fit["C"].as_f64().unwrap() - 2.0).abs() < 1e-2, "{fit}");
    let manifest = json_file(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"]["experiment"], "weyl");
    assert_eq!(manifest["summary"]["provenance"], "spectral");
    assert!(dir.path().join("variance.csv").exists());
}

#[test]
fn caputo_l1_exponent_matches_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("caputo_l1.json", dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let alpha = json_file(&dir.path().join("fit.json"))["alpha"].as_f64().unwrap();
    assert!((0.68..=0.72).contains(&alpha), "alpha = {alpha}");
}

#[test]
fn negative_sigma_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("invalid_sigma.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("initial.sigma"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"experiment": "spectral", "grid": {"n": 64, "spacing": 1.0}}"#).unwrap();
    let o = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.spacing"), "{}", stderr(&o));
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    // f = s - 1 - k²: the only zero sits in the right half plane near k = 0
    std::fs::write(
        &cfg,
        r#"{"experiment": "dispersion_scan",
            "output": {"directory": "unused"},
            "dispersion": {"k_min": -1, "k_max": 1, "points": 5, "terms": [
              {"coefficient": [1, 0], "s_power": 1, "k_powers": [0]},
              {"coefficient": [-1, 0], "s_power": 0, "k_powers": [0]},
              {"coefficient": [-1, 0], "s_power": 0, "k_powers": [2]}]}}"#,
    )
    .unwrap();
    let o = bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("dispersion"));
}

#[test]
fn verify_suites_pass_and_are_reproducible() {
    for suite in ["commutation", "convergence", "invariants"] {
        let o = bin().args(["verify", suite]).output().unwrap();
        assert!(o.status.success(), "{suite}: {}", String::from_utf8_lossy(&o.stdout));
        let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(report["pass"], true);
        assert!(!report["checks"].as_array().unwrap().is_empty());
    }
    let a = bin().args(["verify", "invariants", "--seed", "7"]).output().unwrap();
    let b = bin().args(["verify", "invariants", "--seed", "7"]).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let one = tempfile::tempdir().unwrap();
    let two = tempfile::tempdir().unwrap();
    assert!(run_config("weyl_half.json", one.path(), &["--threads", "1"]).status.success());
    assert!(run_config("weyl_half.json", two.path(), &["--threads", "2"]).status.success());
    let mut names: Vec<_> = std::fs::read_dir(one.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != "manifest.json")
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        let a = std::fs::read(one.path().join(&n)).unwrap();
        let b = std::fs::read(two.path().join(&n)).unwrap();
        assert_eq!(a, b, "{n:?} differs");
    }
    let mut a = json_file(&one.path().join("manifest.json"));
    let mut b = json_file(&two.path().join("manifest.json"));
    a["config"]["output"]["directory"] = serde_json::Value::Null;
    b["config"]["output"]["directory"] = serde_json::Value::Null;
    assert_eq!(a, b);
}

#[test]
fn fit_subcommand_round_trips_a_series() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("variance.csv");
    let mut text = String::from("t,value_re,value_im,divergent\n");
    for i in 0..=40 {
        let t = 0.25 * i as f64;
        text.push_str(&format!("{t:.16e},{:.16e},0,0\n", 1.0 + 3.0 * t.powf(0.6)));
    }
    std::fs::write(&series, text).unwrap();
    let o = bin()
        .arg("fit")
        .arg("--series")
        .arg(&series)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = json_file(&dir.path().join("fit.json"));
    assert!((fit["alpha"].as_f64().unwrap() - 0.6).abs() < 1e-9, "{fit}");
    assert!((fit["C"].as_f64().unwrap() - 3.0).abs() < 1e-8, "{fit}");
}

#[test]
fn ml_eval_tabulates_known_values() {
    let o = bin()
        .args(["ml-eval", "--beta", "1", "--z-min", "-2", "--points", "3"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (z, v) = l.split_once(',').unwrap();
            (z.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 3);
    for (z, v) in rows {
        assert!((v - z.exp()).abs() < 1e-14, "E_1({z}) = {v}");
    }
    let bad = bin().args(["ml-eval", "--beta", "0.5", "--z-min", "1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn published_schema_is_current() {
    let o = bin().arg("schema").output().unwrap();
    assert!(o.status.success());
    let committed = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/run_config.schema.json")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), committed);
}
