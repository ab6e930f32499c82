use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"name = "small"

[initial]
[[initial.pieces]]
shape = "disk"
radius = 1.0

[kernel]
kind = "cauchy"

[numerics]
h = 0.1
dt = 0.1
t_end = 0.2
"#;

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn qcflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcflow")).args(args).output().unwrap()
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    qcflow(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn small_run_passes_and_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", SMALL);
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("check,t,measured,bound,margin,pass\n"));
    assert!(csv.contains("distortion,"));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("h = 1.00000000e-1"), "{summary}");
}

#[test]
fn nonpositive_dt_is_a_line_anchored_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", &SMALL.replace("dt = 0.1", "dt = -0.1"));
    let o = run(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("s.cfg:13:") && e.contains("dt"), "{e}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", &SMALL.replace("t_end = 0.2", "t_end = 0.2\nstepsize = 1"));
    let o = run(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stepsize"), "{}", stderr(&o));
}

#[test]
fn zero_end_time_reports_only_the_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", &SMALL.replace("t_end = 0.2", "t_end = 0.0"));
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    // the short-time derivative check uses its own step τ = dt/10
    for line in csv.lines().skip(1).filter(|l| !l.starts_with("initial_derivative,")) {
        let t: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(t, 0.0, "{line}");
    }
}

#[test]
fn blowup_exits_with_three_and_keeps_the_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", &format!("{SMALL}blowup_factor = 1e-3\n"));
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(out.join("report.csv").exists());
}

#[test]
fn converge_rejects_too_few_levels_and_memory_overruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", SMALL);
    let out = dir.path().join("out");
    let o = qcflow(&["converge", cfg.to_str().unwrap(), "--param", "dt", "--levels", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let cfg = write_cfg(dir.path(), "m.cfg", &format!("{SMALL}memory_limit_mb = 1\n"));
    let o = qcflow(&["converge", cfg.to_str().unwrap(), "--param", "h", "--levels", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("memory"), "{}", stderr(&o));
}

#[test]
fn euler_velform_reports_a_vanishing_potential() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("kind = \"cauchy\"", "kind = \"euler\"")
        .replace("shape = \"disk\"\nradius = 1.0", "shape = \"gaussian\"\nwidth = 0.5")
        .replace("h = 0.1\ndt = 0.1", "h = 0.2\ndt = 0.1");
    let cfg = write_cfg(dir.path(), "e.cfg", &format!("{text}\n[velform]\nlevels = 2\nt = 0.1\n"));
    let out = dir.path().join("out");
    let o = qcflow(&["velform", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("velform.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    for line in csv.lines().skip(1) {
        let q: f64 = line.split(',').nth(8).unwrap().parse().unwrap();
        assert_eq!(q, 0.0, "{line}");
    }
}

#[test]
fn reports_do_not_depend_on_the_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", SMALL);
    let mut reports = Vec::new();
    for n in ["1", "3"] {
        let out = dir.path().join(format!("out{n}"));
        let o = run(&cfg, &out, &["--threads", n]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        reports.push(std::fs::read(out.join("report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn tolerance_scale_is_validated_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", SMALL);
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &["--tol-scale", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&cfg, &out, &["--tol-scale", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("tol_scale = 2"), "{summary}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&dir.path().join("nope.cfg"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
