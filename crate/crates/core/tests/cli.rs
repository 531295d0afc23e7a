use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homodyne-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn table1_is_reproducible_byte_for_byte() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let args = ["table1", "--trials", "300", "--nbar", "1,2", "--no-timestamp", "--out"];
    let ra = lab(&[&args[..], &[&out_arg(a.path())]].concat());
    let rb = lab(&[&args[..], &[&out_arg(b.path()), "--workers", "1"]].concat());
    assert_eq!(code(&ra), 0, "{}", String::from_utf8_lossy(&ra.stderr));
    assert_eq!(code(&rb), 0);
    let ta = fs::read(a.path().join("table1.csv")).unwrap();
    let tb = fs::read(b.path().join("table1.csv")).unwrap();
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta.clone()).unwrap();
    assert!(text.starts_with("nbar,mean_estimate,rmse,rmse_stderr,heisenberg,cr_bound\n"));
    assert_eq!(text.lines().count(), 3);

    let rc = lab(&[&args[..], &[&out_arg(c.path()), "--seed", "99"]].concat());
    assert_eq!(code(&rc), 0);
    assert_ne!(fs::read(c.path().join("table1.csv")).unwrap(), ta);
}

#[test]
fn timestamp_header_is_optional() {
    let d = tempfile::tempdir().unwrap();
    let r = lab(&["sample", "--count", "5", "--out", &out_arg(d.path())]);
    assert_eq!(code(&r), 0);
    let text = fs::read_to_string(d.path().join("samples.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# generated "));
    assert_eq!(lines.next(), Some("x"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn config_file_with_flag_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "# short campaign\ntrials = 50\nnbar = 1, 2, 3\nseed = 5\n").unwrap();
    let r = lab(&[
        "table1",
        "--config",
        cfg.to_str().unwrap(),
        "--nbar",
        "2",
        "--no-timestamp",
        "--out",
        &out_arg(d.path()),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(d.path().join("table1.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("2.0000000000000000e0,"));
}

#[test]
fn invalid_configuration_writes_nothing() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("results");
    for args in [
        vec!["table1", "--nu", "0.5"],
        vec!["table1", "--trials", "5"],
        vec!["table1", "--nbar", "1,-1"],
        vec!["scaling", "--nbar", "1,2"],
        vec!["table1", "--m", "0"],
    ] {
        let mut full = args.clone();
        let o = out_arg(&out);
        full.extend(["--out", &o]);
        let r = lab(&full);
        assert_eq!(code(&r), 2, "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
        assert!(!out.exists(), "{args:?} produced output");
    }
    let cfg = d.path().join("bad.cfg");
    fs::write(&cfg, "trials = 10\ncolour = blue\n").unwrap();
    let r = lab(&["table1", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)]);
    assert_eq!(code(&r), 2);
    assert!(!out.exists());
    assert_eq!(code(&lab(&["table1", "--mode", "second-order"])), 2);
}

#[test]
fn scaling_outputs() {
    let d = tempfile::tempdir().unwrap();
    let r = lab(&["scaling", "--trials", "200", "--nbar", "1,2,3", "--no-timestamp", "--out", &out_arg(d.path())]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(d.path().join("scaling.csv")).unwrap();
    assert!(csv.starts_with("nbar,NT,rmse,stderr\n"));
    assert_eq!(csv.lines().count(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("scaling_fit.json")).unwrap()).unwrap();
    for key in ["prefactor", "prefactor_err", "exponent", "exponent_err"] {
        assert!(json[key].is_f64(), "{key}");
    }
    assert_eq!(json["points"].as_array().unwrap().len(), 3);
}

#[test]
fn convergence_and_density_outputs() {
    let d = tempfile::tempdir().unwrap();
    let r = lab(&[
        "convergence",
        "--trials",
        "400",
        "--checkpoints",
        "100,200,400",
        "--no-timestamp",
        "--out",
        &out_arg(d.path()),
    ]);
    // a 400-trial trace need not be flat; only the file layout matters here
    assert!(matches!(code(&r), 0 | 1));
    let csv = fs::read_to_string(d.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("trials,rmse"));
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().last().unwrap().starts_with("400,"));

    let r = lab(&["density", "--no-timestamp", "--out", &out_arg(d.path())]);
    assert_eq!(code(&r), 0);
    let csv = fs::read_to_string(d.path().join("density.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,pdf"));
    assert!(csv.lines().count() > 1000);
}

#[test]
fn fisher_squeezed_only() {
    let r = lab(&["fisher", "--nu", "1", "--nbar", "10"]);
    assert_eq!(code(&r), 0);
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.contains("ybar²/ΔX²"));
    assert!(text.contains("ratio 1.0000"), "{text}");
}

#[test]
fn validate_passes() {
    let r = lab(&["validate"]);
    assert_eq!(code(&r), 0);
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(!text.contains("FAIL"));
}
