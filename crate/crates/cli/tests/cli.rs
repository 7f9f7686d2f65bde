use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mixcolor(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixcolor"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

/// Rows with wall-clock columns dropped.
fn without_timing(path: &Path) -> Vec<Vec<String>> {
    let (header, rows) = read_csv(path);
    let keep: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| !(h.ends_with("_ns") || *h == "p50" || *h == "p95"))
        .map(|(i, _)| i)
        .collect();
    rows.into_iter()
        .map(|r| keep.iter().map(|&i| r[i].clone()).collect())
        .collect()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const NOISELESS: &str = r#"{"n": 2000, "K": [20, 40], "m_over_k": [3.8], "trials": 6, "seed": 1}"#;
const ROBUST: &str =
    r#"{"n": 1024, "K": 10, "trials": 3, "N": [10], "m_over_k": [3.0], "perturbation": [0.0, 0.3]}"#;

#[test]
fn noiseless_phase_writes_one_row_per_point() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "c.json", NOISELESS);
    assert_ok(&mixcolor(dir.path(), &["noiseless-phase", "--config", "c.json"]));
    let (header, rows) = read_csv(&dir.path().join("noiseless-phase.csv"));
    assert_eq!(header[..3], ["L", "n", "K"]);
    assert!(header.contains(&"success_rate".to_owned()));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2], "20");
    assert_eq!(rows[1][2], "40");
}

#[test]
fn reruns_are_identical_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "c.json", NOISELESS);
    for (mode, jobs, out) in [
        ("noiseless-runtime", "1", "a.csv"),
        ("noiseless-runtime", "2", "b.csv"),
        ("robust-runtime", "1", "c.csv"),
        ("robust-runtime", "2", "d.csv"),
    ] {
        let cfg = if mode.starts_with("robust") { "r.json" } else { "c.json" };
        write(dir.path(), "r.json", ROBUST);
        assert_ok(&mixcolor(
            dir.path(),
            &[mode, "--config", cfg, "--jobs", jobs, "--out", out],
        ));
    }
    let p = |f: &str| dir.path().join(f);
    assert_eq!(without_timing(&p("a.csv")), without_timing(&p("b.csv")));
    assert_eq!(without_timing(&p("c.csv")), without_timing(&p("d.csv")));
    assert!(read_csv(&p("a.csv")).0.contains(&"mean_decode_ns".to_owned()));
}

#[test]
fn deterministic_modes_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "c.json", NOISELESS);
    for out in ["x.csv", "y.csv"] {
        assert_ok(&mixcolor(
            dir.path(),
            &["noiseless-phase", "--config", "c.json", "--out", out],
        ));
    }
    let x = fs::read(dir.path().join("x.csv")).unwrap();
    let y = fs::read(dir.path().join("y.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn robust_modes_run() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "r.json", ROBUST);
    assert_ok(&mixcolor(dir.path(), &["robust-sample", "--config", "r.json"]));
    let (header, rows) = read_csv(&dir.path().join("robust-sample.csv"));
    assert_eq!(header, ["n", "K", "N", "P1", "P2", "P3", "M", "m", "successes"]);
    assert_eq!(rows, vec![vec!["1024", "10", "10", "10", "3", "78", "30", "27300", &rows[0][8]]]);

    assert_ok(&mixcolor(dir.path(), &["perturbation", "--config", "r.json"]));
    let (_, rows) = read_csv(&dir.path().join("perturbation.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][2], "0.3");
}

#[test]
fn devo_optimize_reports_the_l2_optimum() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "d.json",
        r#"{"L": 2, "ranges": {"d": [14, 16], "R": [3, 3], "V": [3, 3]}}"#,
    );
    let out = mixcolor(dir.path(), &["devo-optimize", "--config", "d.json", "--out", "f.csv"]);
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("(15,3,3,3.71)"));
    let (header, rows) = read_csv(&dir.path().join("f.csv"));
    assert_eq!(header[..6], ["d", "R", "V", "c", "m_over_K", "p_star"]);
    assert_eq!(rows[0][..5], ["15", "3", "3", "3.71", "33.39"]);
    assert!(rows
        .iter()
        .all(|r| ["14", "15", "16"].contains(&r[0].as_str()) && r[1] == "3" && r[2] == "3"));
}

#[test]
fn single_run_round_trips_its_measurements() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "one.json",
        r#"{"n": 2000, "K": 20, "measurements_out": "ms.json"}"#,
    );
    write(
        dir.path(),
        "two.json",
        r#"{"n": 2000, "K": 20, "measurements_in": "ms.json"}"#,
    );
    assert_ok(&mixcolor(
        dir.path(),
        &["single-run", "--config", "one.json", "--seed", "9", "--out", "one.csv"],
    ));
    assert!(dir.path().join("ms.json").exists());
    assert_ok(&mixcolor(
        dir.path(),
        &["single-run", "--config", "two.json", "--seed", "9", "--out", "two.csv"],
    ));
    let a = without_timing(&dir.path().join("one.csv"));
    let b = without_timing(&dir.path().join("two.csv"));
    assert_eq!(a, b);
    assert_eq!(a.len(), 1);
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "s.json", r#"{"n": 2000, "K": 20, "seed": 4}"#);
    for (args, out) in [(vec!["--seed", "4"], "a.csv"), (vec![], "b.csv")] {
        let mut full = vec!["single-run", "--config", "s.json", "--out", out];
        full.extend(args);
        assert_ok(&mixcolor(dir.path(), &full));
    }
    let p = |f: &str| without_timing(&dir.path().join(f));
    assert_eq!(p("a.csv"), p("b.csv"));
}

#[test]
fn bad_configs_exit_with_status_one() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "unknown.json", r#"{"n": 2000, "Kay": 20}"#);
    write(dir.path(), "zero.json", r#"{"n": 2000, "K": 20, "trials": 0}"#);
    write(dir.path(), "broken.json", "{ not json");
    write(dir.path(), "ranges.json", r#"{"ranges": {"r": [3, 3]}}"#);
    for cfg in ["unknown.json", "zero.json", "broken.json", "ranges.json", "missing.json"] {
        let out = mixcolor(dir.path(), &["noiseless-phase", "--config", cfg]);
        assert_eq!(out.status.code(), Some(1), "{cfg}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{cfg}");
    }
}

#[test]
fn unknown_mode_is_rejected() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "c.json", NOISELESS);
    let out = mixcolor(dir.path(), &["everything", "--config", "c.json"]);
    assert!(!out.status.success());
}
