use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const REFERENCE: &str = include_str!("../configs/reference.toml");

fn daqs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_daqs"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    daqs(&args)
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn couplings_writes_tables_with_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), REFERENCE);
    let out = dir.path().join("out");
    let o = run("couplings", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let couplings = read(out.join("couplings.csv"));
    let mut lines = couplings.lines();
    assert_eq!(lines.next(), Some("i,j,J_ij_rad_s"));
    assert_eq!(lines.count(), 25);
    assert!(read(out.join("positions.csv")).starts_with("ion,z_reduced,z_m\n"));

    let fit = read(out.join("fit.csv"));
    let row: Vec<f64> = fit
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((0.5..=0.7).contains(&row[1]), "alpha {}", row[1]);
    assert!(read(out.join("metadata.txt")).contains("version = "));
}

#[test]
fn modes_lists_both_radial_axes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), REFERENCE);
    let out = dir.path().join("out");
    assert!(run("modes", &cfg, &out, &[]).status.success());
    let modes = read(out.join("modes.csv"));
    assert!(modes.starts_with("mode,axis,frequency_rad_s,detuning_rad_s\n"));
    assert_eq!(modes.lines().count(), 11);
    assert!(read(out.join("participation.csv")).starts_with("mode,ion,b,eta\n"));
}

#[test]
fn overrides_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), REFERENCE);
    let out = dir.path().join("out");
    let o = run(
        "couplings",
        &cfg,
        &out,
        &[
            "--override",
            "chain.num_ions=3",
            "--override",
            "experiment.initial_state=↓↑↓",
        ],
    );
    assert!(o.status.success());
    assert_eq!(read(out.join("couplings.csv")).lines().count(), 10);
    assert_eq!(read(out.join("positions.csv")).lines().count(), 4);
}

#[test]
fn compare_writes_labelled_generators() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), REFERENCE);
    let out = dir.path().join("out");
    let o = run(
        "compare",
        &cfg,
        &out,
        &["--override", "experiment.time_points=7"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fid = read(out.join("fidelity.csv"));
    assert!(fid.starts_with("Jt,fidelity,protocol,l\n"));
    for label in ["digital", "daqs"] {
        assert!(fid.contains(label), "missing {label}");
    }
    let mag = read(out.join("magnetization.csv"));
    assert!(
        mag.contains(",exact\n") && mag.contains(",daqs_l2\n") && mag.contains(",digital_l3\n")
    );
}

#[test]
fn bad_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[chain]\nnum_ions = 5\nbogus_key = 1\n");
    let o = run("couplings", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn single_ion_protocol_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), REFERENCE);
    let o = run(
        "protocol",
        &cfg,
        &dir.path().join("out"),
        &[
            "--override",
            "chain.num_ions=1",
            "--override",
            "experiment.initial_state=\"↑\"",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn missing_config_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        "couplings",
        &dir.path().join("nope.toml"),
        &dir.path().join("out"),
        &[],
    );
    assert!(!o.status.success());
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), REFERENCE);
    let extra = [
        "--override",
        "experiment.time_points=5",
        "--override",
        "chain.num_ions=3",
        "--override",
        "experiment.initial_state=↓↑↓",
    ];
    let outs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("run{k}"))).collect();
    for out in &outs {
        assert!(run("compare", &cfg, out, &extra).status.success());
    }
    for name in ["fidelity.csv", "magnetization.csv", "metadata.txt"] {
        assert_eq!(
            read(outs[0].join(name)),
            read(outs[1].join(name)),
            "{name} differs"
        );
    }
}
