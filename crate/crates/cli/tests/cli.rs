use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bmsfield"));
    c.env_remove("BMSFIELD_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn bmsfield")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn to_file(dir: &Path, name: &str, o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = dir.join(name);
    std::fs::write(&p, &o.stdout).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn compose_with_inverse_is_identity() {
    let d = TempDir::new().unwrap();
    let g = to_file(d.path(), "g.json", &run(&["bms", "random", "--boosts"]));
    let gi = to_file(d.path(), "gi.json", &run(&["bms", "inverse", "--g", &g]));
    let e = run(&["bms", "compose", "--g1", &g, "--g2", &gi]);
    let v: Value = serde_json::from_slice(&e.stdout).unwrap();
    let lam = v["lambda"].as_array().unwrap();
    let expect = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]];
    for (x, y) in lam.iter().zip(expect) {
        for k in 0..2 {
            assert!((x[k].as_f64().unwrap() - y[k]).abs() < 1e-12);
        }
    }
    for c in v["f"]["coeffs"].as_array().unwrap() {
        assert!(c[2].as_f64().unwrap().abs() < 1e-9, "{c}");
    }
}

#[test]
fn act_on_scri_json() {
    let d = TempDir::new().unwrap();
    let g = to_file(d.path(), "g.json", &run(&["bms", "random"]));
    let o = run(&["--json", "bms", "act", "--g", &g, "--u", "0.5", "--theta", "1.0", "--phi", "-2"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let t = v["theta"].as_f64().unwrap();
    assert!((0.0..=std::f64::consts::PI).contains(&t));
}

#[test]
fn checks_exit_zero() {
    for args in [
        vec!["bms", "cocycle-check", "--trials", "50"],
        vec!["momenta", "invariance-check", "--trials", "20"],
        vec!["wn", "identity-check", "--which", "DQ"],
        vec!["wn", "identity-check", "--which", "fg-inverse"],
        vec!["dyn", "symplectic-rank", "--cap", "1"],
    ] {
        let o = run(&args);
        assert!(o.status.success(), "{args:?}: {}", stdout(&o));
        assert!(stdout(&o).contains("PASS") || stdout(&o).contains("rank"), "{args:?}");
    }
}

#[test]
fn impossible_tolerance_exits_one() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"tolerances": {"cocycle": 0}}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "bms", "cocycle-check"]);
    // The cocycle defect is rarely exactly zero at 200 trials.
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn bad_config_exits_two() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"k": 0.5}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "verify", "cocycle"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k > 1"));

    let o = bin()
        .env("BMSFIELD_CONFIG", cfg.to_str().unwrap())
        .args(["verify", "cocycle"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn schema_error_exits_two() {
    let d = TempDir::new().unwrap();
    let p = d.path().join("x.json");
    std::fs::write(&p, r#"{"L_max": 2, "coeffs": [[0, 0, "x"]]}"#).unwrap();
    let o = run(&["roundtrip", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("$.coeffs[0][2]"));
    assert_eq!(run(&["roundtrip", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn verify_json_is_reproducible() {
    let a = run(&["--json", "--seed", "7", "verify", "cocycle"]);
    let b = run(&["--json", "--seed", "7", "verify", "cocycle"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["suite"], "cocycle");
    assert!(!v["checks"].as_array().unwrap().is_empty());
    assert_eq!(run(&["verify", "nope"]).status.code(), Some(2));
}

#[test]
fn hermite_operators() {
    let d = TempDir::new().unwrap();
    let psi = d.path().join("psi.json");
    std::fs::write(
        &psi,
        r#"{"N": 4, "directions": [[0,0],[1,-1],[1,0],[1,1],[2,0]], "k": 2.0,
            "coeffs": [[[1,0,0,0,0], 1.0, 0.0], [[0,0,2,0,1], 0.5, 0.0]]}"#,
    )
    .unwrap();
    let psi = psi.to_str().unwrap();
    let q = to_file(d.path(), "q.json", &run(&["wn", "op", "--op", "Q", "--slot", "0", "--input", psi]));
    let dd = to_file(d.path(), "d.json", &run(&["wn", "op", "--op", "D", "--slot", "0", "--input", psi]));
    let ds = to_file(d.path(), "ds.json", &run(&["wn", "op", "--op", "Dstar", "--slot", "0", "--input", psi]));
    let coeffs = |p: &str| -> Value {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v["coeffs"].clone()
    };
    // Q = D + D* slotwise: collect both sides by multi-index.
    let mut sum = std::collections::BTreeMap::<String, f64>::new();
    for p in [&dd, &ds] {
        for c in coeffs(p).as_array().unwrap() {
            *sum.entry(c[0].to_string()).or_default() += c[1].as_f64().unwrap();
        }
    }
    let qc = coeffs(&q);
    for c in qc.as_array().unwrap() {
        let s = sum.remove(&c[0].to_string()).unwrap_or(0.0);
        assert!((s - c[1].as_f64().unwrap()).abs() < 1e-14);
    }
    assert!(sum.values().all(|v| v.abs() < 1e-14));

    // D and D* need exactly one of --slot / --alpha.
    assert_eq!(run(&["wn", "op", "--op", "D", "--input", psi]).status.code(), Some(2));

    let fg = to_file(d.path(), "fg.json", &run(&["wn", "op", "--op", "FG", "--input", psi]));
    let back = run(&["wn", "op", "--op", "FG", "--a", "1.4142135623730951", "--b", "0,-1", "--input", &fg]);
    let v: Value = serde_json::from_slice(&back.stdout).unwrap();
    let orig = coeffs(psi);
    let mut map = std::collections::BTreeMap::new();
    for c in v["coeffs"].as_array().unwrap() {
        map.insert(c[0].to_string(), (c[1].as_f64().unwrap(), c[2].as_f64().unwrap()));
    }
    for c in orig.as_array().unwrap() {
        let (re, im) = map.remove(&c[0].to_string()).unwrap();
        assert!((re - c[1].as_f64().unwrap()).abs() < 1e-12 && im.abs() < 1e-12);
    }
    assert!(map.values().all(|(a, b)| a.abs() < 1e-12 && b.abs() < 1e-12));

    let pv = run(&["wn", "op", "--op", "PiV", "--slots", "0,2", "--input", psi]);
    let v: Value = serde_json::from_slice(&pv.stdout).unwrap();
    assert_eq!(v["coeffs"].as_array().unwrap().len(), 1);
}

#[test]
fn dynamics_round() {
    let d = TempDir::new().unwrap();
    let s = to_file(d.path(), "s.json", &run(&["dyn", "random-state", "--degree", "2"]));
    for sub in ["gradient-check", "legendre-check"] {
        let o = run(&["dyn", sub, "--state", &s]);
        assert!(o.status.success(), "{sub}: {}", stdout(&o));
    }
    let o = run(&["--json", "dyn", "lagrangian", "--state", &s, "--m2", "2"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["lagrangian"].as_f64().unwrap().is_finite());
    assert_eq!(stdout(&run(&["roundtrip", &s])).trim(), "true");
}

#[test]
fn induced_round() {
    let d = TempDir::new().unwrap();
    let o = to_file(
        d.path(),
        "o.json",
        &run(&["induced", "build-orbit", "--n-chi", "20", "--n-sphere", "12"]),
    );
    let phi = to_file(d.path(), "phi.json", &run(&["induced", "bump", "--orbit", &o]));
    let g = to_file(d.path(), "g.json", &run(&["bms", "random"]));
    let out = to_file(
        d.path(),
        "out.json",
        &run(&["induced", "act", "--g", &g, "--phi", &phi, "--zero-outside"]),
    );
    let norm = |p: &str| -> f64 {
        let o = run(&["--json", "induced", "norm", "--phi", p]);
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v["norm_squared"].as_f64().unwrap()
    };
    let (a, b) = (norm(&phi), norm(&out));
    assert!(a > 0.0 && ((a - b) / a).abs() < 0.05, "{a} {b}");
    assert_eq!(stdout(&run(&["roundtrip", &phi])).trim(), "true");

    let u = run(&["--json", "induced", "unitarity-check", "--refine", "1"]);
    let v: Value = serde_json::from_slice(&u.stdout).unwrap();
    let rows = v["drift"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1]["relative_drift"].as_f64().unwrap() < rows[0]["relative_drift"].as_f64().unwrap());

    assert_eq!(
        run(&["induced", "build-orbit", "--m", "-1"]).status.code(),
        Some(2)
    );
}

#[test]
fn momenta_casimir_of_fixed_point() {
    let d = TempDir::new().unwrap();
    let b = to_file(
        d.path(),
        "b.json",
        &run(&["momenta", "fixed-point", "--kind", "massive", "--value", "2"]),
    );
    let o = run(&["--json", "momenta", "casimir", "--input", &b]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["mass_squared"].as_f64().unwrap() - 4.0).abs() < 1e-12);
}
