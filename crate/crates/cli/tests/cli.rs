use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn liouville(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Data rows of a trajectory CSV, as `(traj_id, t, state)`.
fn read_rows(path: &Path) -> Vec<(u64, f64, Vec<f64>)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("traj_id"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2..].iter().map(|v| v.parse().unwrap()).collect())
        })
        .collect()
}

fn snapshots(dir: &Path, count: usize) -> PathBuf {
    let mut text = String::from("u0,u1,u2\n");
    for s in 0..count {
        let t = 0.02 * s as f64;
        writeln!(text, "{},{},{}", t.sin(), t.cos(), (2.0 * t).sin()).unwrap();
    }
    write(dir, "snap.csv", &text)
}

#[test]
fn ingest_windows_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    snapshots(dir.path(), 151);
    let o = liouville(&["ingest", "--snapshots", "snap.csv", "--window", "5", "--dt", "0.02", "--output", "t.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&dir.path().join("t.csv"));
    let ids: std::collections::BTreeSet<u64> = rows.iter().map(|r| r.0).collect();
    assert_eq!(ids.len(), 147);
    assert_eq!(rows.len(), 147 * 5);
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    for key in ["# dt=0.02", "# window=5", "# stride=1"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn ingest_window_too_large_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    snapshots(dir.path(), 151);
    let o = liouville(&["ingest", "--snapshots", "snap.csv", "--window", "200", "--dt", "0.02", "--output", "t.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("window exceeds snapshot count"));
}

#[test]
fn ingest_takes_window_from_config() {
    let dir = tempfile::tempdir().unwrap();
    snapshots(dir.path(), 20);
    write(dir.path(), "run.toml", "window = 7\nstride = 3\n");
    let o = liouville(
        &["--config", "run.toml", "ingest", "--snapshots", "snap.csv", "--dt", "0.02", "--stride", "1", "--output", "t.csv"],
        dir.path(),
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(text.contains("# window=7"));
    assert!(text.contains("# stride=1"), "flag overrides config");
}

#[test]
fn zero_field_fits_rank_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sys.toml", "kind = \"polynomial1d\"\ncoeffs = [0.0]\n");
    let o = liouville(
        &["simulate", "--system", "sys.toml", "--count", "4", "--box=-1:1", "--t-max", "1", "--dt", "0.1", "--output", "d.csv"],
        dir.path(),
    );
    assert!(o.status.success());
    let o = liouville(&["fit", "--data", "d.csv", "--output", "m.json"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("rank 0"));
    let o = liouville(&["reconstruct", "--model", "m.json", "--x0", "0.3", "--t-max", "1", "--dt", "0.1", "--output", "r.csv"], dir.path());
    assert!(o.status.success());
    assert!(read_rows(&dir.path().join("r.csv")).iter().all(|r| r.2 == [0.3]));
}

fn growth_data(dir: &Path) {
    write(dir, "sys.toml", "kind = \"linear\"\na = [[1.0]]\n");
    let o = liouville(
        &[
            "simulate", "--system", "sys.toml", "--count", "20", "--box", "0.5:1.5", "--t-max", "0.1", "--dt", "0.005",
            "--seed", "0", "--output", "d.csv",
        ],
        dir,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn eigen_fit_and_predict_growth() {
    let dir = tempfile::tempdir().unwrap();
    growth_data(dir.path());
    write(dir.path(), "run.toml", "method = \"eigen\"\nmu1 = 0.1\nmu2 = 0.3\n");
    let o = liouville(&["--config", "run.toml", "fit", "--data", "d.csv", "--output", "m.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("eigen decomposition: rank"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(doc["method"], "eigen");
    assert_eq!(doc["config"]["mu2"], 0.3);

    let o = liouville(&["predict", "--model", "m.json", "--x0", "1.0", "--t-max", "0.1", "--dt", "0.05", "--output", "p.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&dir.path().join("p.csv"));
    assert_eq!(rows.len(), 3);
    assert!((rows[0].2[0] - 1.0).abs() < 0.02, "x(0) = {}", rows[0].2[0]);
    assert!((rows[2].2[0] - 0.1f64.exp()).abs() < 0.02 * 0.1f64.exp());

    let o = liouville(&["reconstruct", "--model", "m.json", "--x0", "1.0", "--t-max", "0.1", "--dt", "0.05", "--output", "r.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2), "reconstruct rejects eigen models");
}

#[test]
fn singular_reconstruct_blow_up_writes_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    growth_data(dir.path());
    let o = liouville(&["fit", "--data", "d.csv", "--mu1", "0.1", "--mu2", "0.3", "--output", "s.json"], dir.path());
    assert!(o.status.success());
    let o = liouville(
        &["reconstruct", "--model", "s.json", "--x0", "1.0", "--t-max", "5", "--dt", "0.01", "--blowup-bound", "3", "--output", "r.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(text.contains("# blow_up=true"));
    let rows = read_rows(&dir.path().join("r.csv"));
    assert!(rows.len() > 1 && rows.len() < 501);
    assert!(rows.iter().all(|r| r.2[0].abs() <= 3.0));

    let o = liouville(&["modes", "--model", "s.json"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("index,sigma,xi0\n"));
}

#[test]
fn fit_rejects_bad_configuration() {
    let dir = tempfile::tempdir().unwrap();
    growth_data(dir.path());
    let o = liouville(&["fit", "--data", "d.csv", "--method", "eigen", "--mu1", "1", "--mu2", "0.5", "--output", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    write(dir.path(), "bad.toml", "mu3 = 1\n");
    let o = liouville(&["--config", "bad.toml", "fit", "--data", "d.csv", "--output", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = liouville(&["fit", "--data", "missing.csv", "--output", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // Two trajectories of even length: Simpson cannot integrate them.
    write(dir.path(), "d.csv", "traj_id,t,x0\n0,0,1\n0,0.1,1.1\n1,0,2\n1,0.1,2.2\n");
    let o = liouville(&["fit", "--data", "d.csv", "--output", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_passes_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = liouville(&["verify"], dir.path());
    let b = liouville(&["verify"], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.lines().any(|l| l.starts_with("tail_norm(10) ≤ 0.090909") && l.ends_with("PASS")));
    assert!(text.contains(", 0 failed"));
}

#[test]
fn verify_detects_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let o = liouville(&["verify", "--inject-fault"], dir.path());
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("FAIL"));
}
