use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn riesz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riesz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("riesz-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn every_selftest_passes() {
    for cmd in ["verify-lemma", "search-constant", "trace", "torus", "measures"] {
        let out = riesz(&["--selftest", cmd]);
        let log = String::from_utf8_lossy(&out.stderr);
        assert_eq!(code(&out), 0, "{cmd}: {log}");
        assert!(log.lines().all(|l| l.ends_with(" ok")), "{log}");
    }
}

#[test]
fn reversed_radii_are_a_usage_error() {
    let out = riesz(&["verify-lemma", "--instances", "3", "--radii", "0.5", "0.3"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
}

#[test]
fn usage_errors() {
    for args in [
        &["verify-lemma", "--instances", "3", "--radii", "0.2", "1.5"][..],
        &["--quad-points", "7", "verify-lemma", "--instances", "3"],
        &["--tol-lemma", "-1", "verify-lemma", "--instances", "3"],
        &["verify-lemma", "--bogus"],
        &["trace"],
        &["trace", "/nonexistent/poly.txt", "--r", "0.1", "--rho", "0.5"],
        &["torus", "--instances", "1", "--dims", "2", "--d1", "2", "--d2", "1"],
        &["torus", "--instances", "1", "--p", "0.5"],
        &["measures", "--measure", "/nonexistent/mu.txt"],
    ] {
        assert_eq!(code(&riesz(args)), 2, "{args:?}");
    }
}

#[test]
fn constants_are_not_violations() {
    let out = riesz(&["verify-lemma", "--instances", "40", "--degree", "0"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("40 degenerate, 0 violations"));
}

#[test]
fn stdout_mode_separates_artifacts() {
    let out = riesz(&["verify-lemma", "--instances", "5"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("## ")).collect();
    assert_eq!(names, ["lemma.csv", "violations.jsonl"]);
    assert_eq!(text.lines().filter(|l| l.starts_with("index,")).count(), 1);
}

#[test]
fn artifacts_embed_the_config() {
    let dir = scratch("header");
    let d = dir.to_str().unwrap();
    let out = riesz(&["--out", d, "--seed", "9", "verify-lemma", "--instances", "4", "--degree", "3"]);
    assert_eq!(code(&out), 0);
    let csv = read(&dir, "lemma.csv");
    let first = csv.lines().next().unwrap();
    let json = first.split_once(" config: ").expect("header").1;
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["command"], "verify-lemma");
    assert_eq!(v["seed"], 9);
    assert_eq!(v["quad_points"], 4096);
    assert_eq!(v["args"]["degree"], 3);
    assert_eq!(v["tolerances"]["lemma"], 1e-8);
    assert!(!first.contains(d));
    assert_eq!(csv.lines().count(), 2 + 4);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn runs_are_byte_identical() {
    let runs: Vec<&[&str]> = vec![
        &["verify-lemma", "--instances", "200"],
        &["search-constant", "--restarts", "4", "--iterations", "300", "--sweep"],
        &["torus", "--instances", "2", "--dims", "2", "--axis-points", "64", "--slice-points", "8", "--z-points", "8"],
        &["--mc-samples", "20000", "measures", "--cg-depth", "8"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let (a, b) = (scratch(&format!("det{k}a")), scratch(&format!("det{k}b")));
        for dir in [&a, &b] {
            let mut full = vec!["--out", dir.to_str().unwrap()];
            full.extend_from_slice(args);
            assert_eq!(code(&riesz(&full)), 0, "{args:?}");
        }
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for n in names {
            let n = n.to_str().unwrap();
            assert_eq!(read(&a, n), read(&b, n), "{args:?} {n}");
        }
        fs::remove_dir_all(a).unwrap();
        fs::remove_dir_all(b).unwrap();
    }
}

#[test]
fn seed_changes_the_instances() {
    let a = riesz(&["--seed", "1", "verify-lemma", "--instances", "5"]);
    let b = riesz(&["--seed", "2", "verify-lemma", "--instances", "5"]);
    let body = |o: &Output| {
        let s = String::from_utf8_lossy(&o.stdout).into_owned();
        s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
    };
    assert_ne!(body(&a), body(&b));
}

#[test]
fn trace_of_a_file() {
    let dir = scratch("trace");
    let poly = dir.join("f.txt");
    fs::write(&poly, "1 0\n0.5 0.25\n-0.3 0\n").unwrap();
    let p = poly.to_str().unwrap();
    let out = riesz(&["--out", dir.to_str().unwrap(), "trace", p, "--r", "0.2", "--rho", "0.7"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "trace.csv");
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert!(rows.len() > 3);
    assert!(rows.iter().all(|r| r.ends_with(",true")), "{csv}");
    assert!(!read(&dir, "trace.txt").is_empty());

    // zero at 1/2, exactly on the ϱ-circle
    fs::write(&poly, "-0.5 0\n1 0\n").unwrap();
    let out = riesz(&["trace", p, "--r", "0.1", "--rho", "0.5"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--nudges"));
    let out = riesz(&["trace", p, "--r", "0.1", "--rho", "0.5", "--nudges", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn torus_on_a_file() {
    let dir = scratch("torus");
    let poly = dir.join("p.txt");
    fs::write(&poly, "0 : 1 0\n0 1 : 1 0\n1 0 2 : 0.5 -0.5\n").unwrap();
    let out = riesz(&[
        "--out",
        dir.to_str().unwrap(),
        "torus",
        "--poly",
        poly.to_str().unwrap(),
        "--axis-points",
        "128",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "torus.csv");
    for check in ["monotone", "density", "substitution", "h1-bound", "h1-bound-slice", "chain"] {
        assert!(csv.lines().any(|l| l.starts_with(&format!("{check},"))), "{check}");
    }
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn measures_exit_codes() {
    let out = riesz(&["measures", "--cg-depth", "8"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = riesz(&["measures", "--contrast", "--cg-depth", "8"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // recovered coefficients carry rounding, so a zero tolerance is a violation
    let out = riesz(&["--tol-coeff", "0", "measures", "--cg-depth", "8"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn measure_file_round_trip() {
    let dir = scratch("measure");
    let mu = dir.join("mu.txt");
    fs::write(&mu, "atoms 0\ndensity\n0 : 1 0\n2 : 0 0.5\n").unwrap();
    let out = riesz(&["--out", dir.to_str().unwrap(), "measures", "--measure", mu.to_str().unwrap(), "--cg-depth", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let line = read(&dir, "measures.jsonl");
    let v: serde_json::Value = serde_json::from_str(line.lines().nth(1).unwrap()).unwrap();
    assert_eq!(v["contrast"], false);
    assert_eq!(v["analyticity"]["analytic"], true);
    fs::remove_dir_all(dir).unwrap();
}
