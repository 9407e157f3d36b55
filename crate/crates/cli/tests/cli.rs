use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TABLE1: &str = include_str!("../../core/data/table1.toml");

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mcf-ttdl"));
    c.env_remove("MCF_TTDL_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

/// Replaces the first `key = ...` line.
fn edit(text: &str, key: &str, value: &str) -> String {
    let mut done = false;
    text.lines()
        .map(|l| {
            if !done && l.starts_with(&format!("{key} =")) {
                done = true;
                format!("{key} = {value}")
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn delays_at_anchor_are_equal() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["delays", "--wavelength", "1550", "--out-dir", s(dir.path())]));
    let r = rows(&dir.path().join("delays.csv"));
    assert_eq!(r.len(), 7);
    assert!(r.iter().all(|x| x[2] == "4900000"));
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn filter_free_spectral_ranges() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["filter", "--out-dir", s(dir.path())]));
    let r = rows(&dir.path().join("filter_summary.csv"));
    let fsr: Vec<f64> = r.iter().map(|x| x[2].parse().unwrap()).collect();
    assert!((fsr[0] / 1e10 - 1.0).abs() < 5e-3, "{fsr:?}");
    assert!((fsr[1] / 4e9 - 1.0).abs() < 5e-3, "{fsr:?}");
    let f = rows(&dir.path().join("filter_1560nm.csv"));
    assert_eq!(f.len(), 2001);
    assert_eq!(f[0], ["0", "0"]);
}

#[test]
fn xtalk_peak_near_threshold() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["xtalk", "--out-dir", s(dir.path())]));
    let r = rows(&dir.path().join("xtalk_summary.csv"));
    let peak: f64 = r[0][0].parse().unwrap();
    assert!((peak - 103.0).abs() <= 5.0, "{peak}");
}

#[test]
fn beamform_polar_shifts_angles() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["beamform", "--wavelength", "1560", "--polar", "--out-dir", s(dir.path())]));
    let r = rows(&dir.path().join("beamform_1560nm.csv"));
    assert_eq!(r[0][0], "0");
    assert_eq!(r.last().unwrap()[0], "180");
}

#[test]
fn validate_reports_single_violation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, edit(TABLE1, "a1_um", "-1.0")).unwrap();
    let out = run(&["validate", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.contains("a1_um"));
}

#[test]
fn validate_reports_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, edit(&edit(TABLE1, "a1_um", "-1.0"), "delta1_pct", "-0.5")).unwrap();
    let out = run(&["validate", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("a1_um") && stdout.contains("delta1_pct"), "{stdout}");
}

#[test]
fn validate_accepts_bundled_design() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ok.toml");
    fs::write(&p, TABLE1).unwrap();
    let out = run(&["validate", s(&p)]);
    ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "valid: 7 cores");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("u.toml");
    fs::write(&p, format!("{TABLE1}\nbogus = 1\n")).unwrap();
    let out = run(&["delays", "--design", s(&p), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus"));
    assert_eq!(err.trim().lines().count(), 1);
    assert!(!dir.path().join("o").join("manifest.json").exists());
}

#[test]
fn infeasible_design_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("targets.toml");
    fs::write(&t, "dispersion_ps_per_km_nm = [14.75, 60.0]\n").unwrap();
    let out = run(&["design", "--targets", s(&t), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stderr).trim().lines().count(), 1);
}

#[test]
fn bad_argument_value_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bend", "--r-step-mm", "0", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn design_writes_loadable_fiber() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["design", "--out-dir", s(dir.path())]));
    let d = dir.path().join("design.toml");
    ok(&run(&["validate", s(&d)]));
    let report = rows(&dir.path().join("design_report.csv"));
    assert_eq!(report.len(), 7);
    for r in &report {
        let target: f64 = r[1].parse().unwrap();
        let got: f64 = r[2].parse().unwrap();
        assert!((target - got).abs() <= 0.05);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["tolerance", "--trials", "50", "--seed", "7"];
    ok(&run(&[&args[..], &["--out-dir", s(a.path())]].concat()));
    ok(&run(&[&args[..], &["--out-dir", s(b.path())]].concat()));
    for f in ["tolerance.csv", "tolerance_trials.csv", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_round_trips_through_rerun() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let design = a.path().join("d.toml");
    fs::write(&design, edit(TABLE1, "length_km", "5.0")).unwrap();
    ok(&run(&[
        "filter",
        "--design",
        s(&design),
        "--wavelength",
        "1575",
        "--plot",
        "--out-dir",
        s(&a.path().join("run")),
    ]));
    // The rerun must not depend on the original design file.
    fs::remove_file(&design).unwrap();
    let manifest = a.path().join("run").join("manifest.json");
    ok(&run(&["rerun", s(&manifest), "--out-dir", s(b.path())]));
    for f in ["filter_1575nm.csv", "filter_1575nm.gp", "filter_summary.csv", "manifest.json"] {
        assert_eq!(
            fs::read(a.path().join("run").join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let fsr: f64 = rows(&b.path().join("filter_summary.csv"))[0][2].parse().unwrap();
    assert!((fsr / 8e9 - 1.0).abs() < 5e-3, "{fsr}");
}

#[test]
fn env_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["delays"])
        .env("MCF_TTDL_OUT_DIR", dir.path())
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.path().join("delays.csv").exists());

    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    ok(&bin()
        .args(["delays", "--out-dir", s(flag.path())])
        .env("MCF_TTDL_OUT_DIR", env.path())
        .output()
        .unwrap());
    assert!(flag.path().join("delays.csv").exists());
    assert!(!env.path().join("delays.csv").exists());
}

#[test]
fn plot_flag_writes_gnuplot_scripts() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["bend", "--plot", "--out-dir", s(dir.path())]));
    let gp = fs::read_to_string(dir.path().join("bend.gp")).unwrap();
    assert!(gp.contains("set datafile separator ','"));
    assert!(gp.contains("'bend.csv'"));
    assert!(gp.contains("core 7"));

    let plain = tempfile::tempdir().unwrap();
    ok(&run(&["bend", "--out-dir", s(plain.path())]));
    assert!(!plain.path().join("bend.gp").exists());
}

#[test]
fn reproduce_writes_every_study() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["reproduce", "--trials", "20", "--out-dir", s(dir.path())]));
    for f in [
        "fig5b_delays.csv",
        "fig6_xtalk.csv",
        "fig7a_bend.csv",
        "fig7b_dispersion.csv",
        "fig8_theta.csv",
        "fig9_tolerance.csv",
        "fig10_filter_summary.csv",
        "fig11_beamform_summary.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 1);
    assert_eq!(m["command"]["name"], "reproduce");
}
