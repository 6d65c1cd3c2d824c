use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vertexlab::oracle::{exact_distribution, ModelSpec, WrapSector};

fn vertexlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vertexlab")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    vertexlab(&all)
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn fkg_check_passes_on_3x3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["fkg-check", "--model.c=1.5", "--domain.shape=box(3,3)"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let j = json(tmp.path(), "fkg-check");
    assert_eq!(j["passed"], true);
    assert_eq!(j["config"]["model.c"], "1.5");
    assert!(j["git_describe"].as_str().is_some_and(|s| !s.is_empty()));
    let csv = fs::read_to_string(tmp.path().join("fkg-check.csv")).unwrap();
    assert!(csv.starts_with("# schema=v1\ncheck,checked,worst_slack,witness,asserted\n"));
}

#[test]
fn enumerate_torus_matches_brute_force_count() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["enumerate", "--domain.shape=torus(2)", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("enumerate.csv")).unwrap();
    let rows = csv.lines().count() - 2;
    let spec = ModelSpec::SixVertexWrapped { n: 2, m: 2, torus: true, sector: WrapSector::Any, a: 1.0, b: 1.0, c: 1.0 };
    assert_eq!(rows, exact_distribution(&spec).unwrap().len());
    assert!(!tmp.path().join("enumerate.json").exists());
}

#[test]
fn missing_output_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_vertexlab"))
        .current_dir(tmp.path())
        .args(["fkg-check", "--model.c=1.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    for args in [
        vec!["enumerate", "--model.d=1"],
        vec!["enumerate", "--model.c=abc"],
        vec!["enumerate", "--seed", "-3"],
        vec!["frobnicate"],
        vec!["es-check", "--domain.shape=torus(4)"],
    ] {
        let out = run_in(&dir, &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!dir.exists(), "{args:?} wrote artifacts");
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["sample", "--domain.shape=box(5,5)", "--run.sweeps=300", "--seed", "11", "--model.c=2"];
    let mut csvs = Vec::new();
    for sub in ["a", "b"] {
        let dir = tmp.path().join(sub);
        assert_eq!(run_in(&dir, &args).status.code(), Some(0));
        csvs.push(fs::read(dir.join("sample.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let dir = tmp.path().join("c");
    let mut other = args.to_vec();
    other[3] = "--seed=12";
    other.remove(4);
    assert_eq!(run_in(&dir, &other).status.code(), Some(0));
    assert_ne!(fs::read(dir.join("sample.csv")).unwrap(), csvs[0]);
}

#[test]
fn config_file_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# crossing sweep\nmodel.c = 2\ndomain.sizes = 3,4\n").unwrap();
    let first = tmp.path().join("first");
    let out = run_in(&first, &["crossing", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let resolved = first.join("crossing.cfg");
    let second = tmp.path().join("second");
    let out = run_in(&second, &["crossing", "--config", resolved.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(first.join("crossing.csv")).unwrap(), fs::read(second.join("crossing.csv")).unwrap());
    assert_eq!(json(&first, "crossing")["summary"], json(&second, "crossing")["summary"]);

    fs::write(&cfg, "model.colour = 2\n").unwrap();
    assert_eq!(run_in(&tmp.path().join("bad"), &["crossing", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn violated_comparison_exits_with_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["compare", "--grcm.bonds=0-1", "--grcm.p=0.2,0.05,0.1,0.15", "--grcm.q_tau=3"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ν_p[A] ≥ ν_p̃[A]") && err.contains("witness"), "{err}");
    let j = json(tmp.path(), "compare");
    assert_eq!(j["passed"], false);
    assert!(j["summary"]["gap"].as_f64().unwrap() < -0.07);
}

#[test]
fn identity_checks_pass() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["es-check", "--domain.shape=box(2,2)"],
        vec!["cubic-check", "--domain.shape=box(2,2)", "--model.j_tau=0.3"],
        vec!["cbc-check", "--domain.shape=box(4,4)", "--model.c=1.25"],
        vec!["loops", "--domain.shape=torus(4)", "--bc.kind=torus-pinned", "--run.samples=100", "--model.c=2"],
    ] {
        let out = run_in(tmp.path(), &args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn parallel_and_serial_variance_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["variance", "--domain.sizes=4,6", "--run.method=mcmc", "--run.sweeps=2000", "--model.c=2"];
    let mut csvs = Vec::new();
    for threads in ["1", "3"] {
        let dir = tmp.path().join(threads);
        let mut all = args.to_vec();
        all.extend(["--out", dir.to_str().unwrap()]);
        let out = Command::new(env!("CARGO_BIN_EXE_vertexlab")).env("VERTEXLAB_THREADS", threads).args(&all).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        csvs.push(fs::read(dir.join("variance.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}
