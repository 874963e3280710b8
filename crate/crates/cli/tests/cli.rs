use specweights_core::discretize::{build_domain, write_off, DomainDescriptor, Grading};
use std::path::Path;
use std::process::{Command, Output};

fn specweights(args: &[&str], dir: &Path, env_seed: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_specweights"));
    c.args(args).current_dir(dir).env_remove("SPECWEIGHTS_SEED");
    if let Some(s) = env_seed {
        c.env("SPECWEIGHTS_SEED", s);
    }
    c.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

fn csv_column(text: &str, k: usize) -> f64 {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[1] == k.to_string())
        .map(|f| f[2].parse().unwrap())
        .expect("row present")
}

#[test]
fn solve_interval_writes_pi_squared() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"spec_version": 1, "domain": {"kind": "interval", "n": 400}, "solver": {"count": 2}}"#,
    );
    let out = specweights(&["solve", "--config", "c.json", "--out", "res"], dir.path(), None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res/solve.csv")).unwrap();
    assert!(csv.starts_with("sweep_param,k,value,residual"));
    let mu1 = csv_column(&csv, 1);
    assert!((mu1 / std::f64::consts::PI.powi(2) - 1.0).abs() < 1e-3, "{mu1}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("res/solve.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "ok");
}

#[test]
fn certify_cheeger_interval_passes() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"spec_version": 1, "out": "o", "certificate": {"kind": "cheeger_lower", "cases": [
            {"name": "unit", "domain": {"kind": "interval", "n": 400},
             "rho": {"type": "constant", "value": 1.0}, "sigma": {"type": "constant", "value": 1.0}}]}}"#,
    );
    let out = specweights(&["certify", "--config", "c.json", "--plot"], dir.path(), None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/cheeger_lower.json")).unwrap()).unwrap();
    assert_eq!(json["verdict"], "pass");
    assert!((json["margin"].as_f64().unwrap() - 8.8696).abs() < 0.01);
    assert!(dir.path().join("o/cheeger_lower.svg").exists());
}

#[test]
fn unknown_family_is_a_schema_error_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        "{\n  \"spec_version\": 1,\n  \"domain\": {\"kind\": \"interval\", \"n\": 40},\n  \"family\": {\"spec\": {\"family\": \"moonbeam\", \"eps\": 0.1}}\n}\n",
    );
    let out = specweights(&["family", "--config", "c.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("moonbeam") && err.contains("c.json:4:"), "{err}");
    assert!(err.contains("family.spec.family"), "{err}");
}

#[test]
fn schema_violations_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("version.json", r#"{"spec_version": 7, "domain": {"kind": "interval", "n": 40}}"#),
        ("typo.json", r#"{"spec_version": 1, "domian": {"kind": "interval", "n": 40}}"#),
        ("syntax.json", r#"{"spec_version": 1,"#),
        ("missing.json", r#"{"spec_version": 1}"#),
    ] {
        write(dir.path(), name, body);
        let out = specweights(&["solve", "--config", name], dir.path(), None);
        assert_eq!(out.status.code(), Some(2), "{name}");
    }
}

#[test]
fn numerical_failure_exits_three_with_report() {
    let dir = tempfile::tempdir().unwrap();
    // The family needs a radial or polar domain, which only shows up when
    // the density is built.
    write(
        dir.path(),
        "c.json",
        r#"{"spec_version": 1, "domain": {"kind": "interval", "n": 40},
            "family": {"spec": {"family": "buser_sigma", "eps": 0.1, "a": 0.5}, "role": "sigma"}}"#,
    );
    let out = specweights(&["family", "--config", "c.json", "--out", "."], dir.path(), None);
    assert_eq!(out.status.code(), Some(3));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("family.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "error");
    assert!(json["error"].as_str().unwrap().contains("buser_sigma"));
}

#[test]
fn optimize_requires_a_seed_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"spec_version": 1, "domain": {"kind": "radial_ball", "dimension": 2, "n": 60},
            "optimize": {"target": "rho", "start_amplitude": 0.5, "options": {"max_iter": 8}}}"#,
    );
    let out = specweights(&["optimize", "--config", "c.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    let run = |d: &str| {
        let out = specweights(&["optimize", "--config", "c.json", "--out", d, "--jobs", "2"], dir.path(), Some("11"));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.path().join(d).join("optimize.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/optimize.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 11);
}

#[test]
fn off_mesh_resolves_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let disc = build_domain(&DomainDescriptor::Disc {
        radius: 1.0,
        rings: 12,
        sectors: 36,
        grading: Grading::uniform(),
    })
    .unwrap();
    std::fs::create_dir(dir.path().join("cfg")).unwrap();
    std::fs::write(dir.path().join("cfg/disc.off"), write_off(&disc).unwrap()).unwrap();
    write(
        &dir.path().join("cfg"),
        "c.json",
        r#"{"spec_version": 1, "domain": {"kind": "off_mesh", "path": "disc.off"}, "solver": {"count": 3}}"#,
    );
    let out = specweights(&["solve", "--config", "cfg/c.json", "--out", "o"], dir.path(), None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/solve.csv")).unwrap();
    // First Neumann eigenvalue of the unit disc: j'₁₁² ≈ 3.3900.
    let mu1 = csv_column(&csv, 1);
    assert!((mu1 - 3.39).abs() < 0.05, "{mu1}");
}
