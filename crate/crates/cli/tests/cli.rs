use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))
}

fn floquet(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floquet"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FLOQUET_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn run(cmd: &str, name: &str, extra: &[&str], out: &Path) -> Output {
    let cfg = scenario(name);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    floquet(&args, out)
}

fn quantity(path: &Path, name: &str) -> f64 {
    let mut r = csv::Reader::from_path(path).unwrap();
    for row in r.records() {
        let row = row.unwrap();
        if &row[0] == name {
            return row[1].parse().unwrap();
        }
    }
    panic!("no {name} row in {}", path.display());
}

fn summary(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn heat_spectrum_has_zero_lambda0() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("spectrum", "heat", &[], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let base = dir.path().join("heat/spectrum");
    assert!(quantity(&base.join("spectrum_summary.csv"), "lambda0").abs() < 1e-12);
    assert!(base.join("spectrum.csv").exists() && base.join("spectrum.svg").exists());
    let s = summary(&base.join("summary.json"));
    assert_eq!(s["command"], "spectrum");
    assert_eq!(s["config"]["grid"]["periods"], 16);
}

#[test]
fn heat_has_no_activated_mode_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("lambdam", "heat", &[], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run("instability", "heat", &[], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dissipative_with_quadratic_nonlinearity_reports_unmet_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("dissipative", "kdvks_dissipative", &["--override", "experiment.t_end=5"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&dir.path().join("kdvks_dissipative/dissipative/summary.json"));
    assert_eq!(s["result"]["hypotheses_met"], false);
    assert_eq!(s["config"]["experiment"]["t_end"], 5.0);
}

#[test]
fn unknown_config_key_exits_1_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("spectrum", "heat", &["--override", "grid.bogus=3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn invalid_value_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("spectrum", "heat", &["--override", "grid.periods=3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = floquet(&["selftest"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = std::fs::read_to_string(dir.path().join("selftest/selftest.csv")).unwrap();
    assert!(!text.contains("false"));
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run("lambdam", "kdvks_dissipative", &["--seed", "11", "--jobs", "2"], d.path());
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["activation.csv", "bloch_norms.csv", "summary.json"] {
        let x = std::fs::read(a.path().join("kdvks_dissipative/lambdam").join(f)).unwrap();
        let y = std::fs::read(b.path().join("kdvks_dissipative/lambdam").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let c = tempfile::tempdir().unwrap();
    run("lambdam", "kdvks_dissipative", &["--seed", "12"], c.path());
    let x = std::fs::read(a.path().join("kdvks_dissipative/lambdam/bloch_norms.csv")).unwrap();
    let z = std::fs::read(c.path().join("kdvks_dissipative/lambdam/bloch_norms.csv")).unwrap();
    assert_ne!(x, z);
}

#[test]
fn mathieu_lambda0_is_stable_under_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let mut l0 = Vec::new();
    for m in ["8", "12"] {
        let out = dir.path().join(m);
        let o = run("spectrum", "mathieu", &["--override", &format!("grid.truncation={m}")], &out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        l0.push(quantity(&out.join("mathieu/spectrum/spectrum_summary.csv"), "lambda0"));
    }
    assert!((l0[0] - l0[1]).abs() < 1e-8, "{l0:?}");
}

#[test]
fn instability_echoes_the_escape_time() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("instability", "heat_shift", &["--override", "experiment.deltas=[0.01,0.001]"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let base = dir.path().join("heat_shift/instability");
    let s = summary(&base.join("summary.json"));
    let lm = s["result"]["lambda_m"].as_f64().unwrap();
    let eta = s["result"]["eta"].as_f64().unwrap();
    let mut r = csv::Reader::from_path(base.join("instability.csv")).unwrap();
    let mut n = 0;
    for row in r.records() {
        let row = row.unwrap();
        let delta: f64 = row[0].parse().unwrap();
        let t: f64 = row[1].parse().unwrap();
        assert!((t - (2.0 * eta / delta).ln() / lm).abs() < 1e-9);
        n += 1;
    }
    assert_eq!(n, 2);
    assert!(base.join("trajectory_0.csv").exists() && base.join("trajectory_1.csv").exists());
}

#[test]
fn linear_sandwich_writes_growth_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("linear", "heat_shift", &["--override", "experiment.horizon=5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&dir.path().join("heat_shift/linear/summary.json"));
    assert_eq!(s["result"]["holds"], true);
    assert!(dir.path().join("heat_shift/linear/growth.csv").exists());
}

#[test]
fn hypothesis_partition_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("hypothesis", "heat_shift", &[], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("heat_shift/hypothesis/partition.csv")).unwrap();
    assert!(text.lines().count() >= 2);
}
