//! Runs the `eoreadout` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eoreadout::io::{read_bin, read_csv, RunManifest};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eoreadout"))
}

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/device.toml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn shots(out: &Path, seed: &str) -> Output {
    let cfg = config();
    run(&[
        "shots",
        "--config",
        s(&cfg),
        "--out",
        s(out),
        "--scheme",
        "mw-opt",
        "--shots",
        "400",
        "--seed",
        seed,
    ])
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let o = run(&[
        "shots",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--scheme",
        "bogus",
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let o = run(&[
        "budget",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--sweep",
        "rep_rate:0:1",
    ]);
    assert_eq!(code(&o), 2);
    let o = run(&[
        "shots",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--scheme",
        "mw-mw",
        "--shots",
        "1",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let o = run(&["budget", "--config", s(&missing), "--out", s(dir.path())]);
    assert_eq!(code(&o), 3);

    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config())
        .unwrap()
        .replace("linewidth_mhz = 1.4", "linewidth_mhz = -1.4");
    std::fs::write(&bad, text).unwrap();
    let o = run(&["budget", "--config", s(&bad), "--out", s(dir.path())]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));

    let unknown = dir.path().join("unknown.toml");
    let text = std::fs::read_to_string(config()).unwrap() + "\n[readout]\nsnr_typo = 3.0\n";
    std::fs::write(&unknown, text).unwrap();
    let o = run(&[
        "shots",
        "--config",
        s(&unknown),
        "--out",
        s(dir.path()),
        "--scheme",
        "mw-mw",
        "--shots",
        "10",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn shots_are_deterministic_under_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let o = shots(dir.path(), seed);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("scores.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let report = std::fs::read_to_string(a.path().join("report.txt")).unwrap();
    assert!(report.contains("fidelity"));
}

#[test]
fn replay_reproduces_outputs() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    assert_eq!(code(&shots(first.path(), "11")), 0);
    let manifest = first.path().join("manifest.toml");
    let o = run(&["replay", s(&manifest), "--out", s(second.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m1 = RunManifest::read(&manifest).unwrap();
    let m2 = RunManifest::read(&second.path().join("manifest.toml")).unwrap();
    assert_eq!(m1.id, m2.id);
    assert_eq!(m1.outputs, m2.outputs);
    for name in &m1.outputs {
        let x = std::fs::read(first.path().join(name)).unwrap();
        let y = std::fs::read(second.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn replay_rejects_changed_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("device.toml");
    std::fs::copy(config(), &cfg).unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "budget",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--sweep",
        "rep_rate:0:10:2",
    ]);
    assert_eq!(code(&o), 0);
    let mut text = std::fs::read_to_string(&cfg).unwrap();
    text.push_str("\n# edited\n");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&[
        "replay",
        s(&out.join("manifest.toml")),
        "--out",
        s(&dir.path().join("again")),
    ]);
    assert_eq!(code(&o), 3);
}

fn budget(sweep: &str, format: &str) -> (tempfile::TempDir, eoreadout::io::Table) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let o = run(&[
        "budget",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--sweep",
        sweep,
        "--format",
        format,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = if format == "bin" {
        read_bin(&dir.path().join("budget.bin")).unwrap().1
    } else {
        read_csv(&dir.path().join("budget.csv")).unwrap().1
    };
    (dir, t)
}

#[test]
fn budget_degrades_with_repetition_rate() {
    let (_d, t) = budget("rep_rate:0:200:21", "csv");
    assert_eq!(t.n_rows(), 21);
    let col = |n: &str| t.column(n).unwrap().to_vec();
    let nonincreasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    assert!(nondecreasing(&col("t_mxc_k")));
    assert!(nondecreasing(&col("p_thermal")));
    assert!(nonincreasing(&col("t1_s")));
    assert!(nonincreasing(&col("t2_s")));
    assert!(nonincreasing(&col("fidelity")));
    // the dark row
    assert!((col("t1_s")[0] - 33e-6).abs() < 1e-9);
    assert!((col("p_thermal")[0] - 0.015).abs() < 1e-9);
    assert!((col("t2_s")[0] / 21.59e-6 - 1.0).abs() < 2e-3);
}

#[test]
fn zero_power_row_matches_dark_rate_row() {
    let (_a, power) = budget("power:0:1e-6:3", "csv");
    let (_b, rate) = budget("rep_rate:0:100:3", "csv");
    for name in ["t1_s", "t2_s", "fidelity", "qnd", "p_thermal"] {
        assert_eq!(
            power.column(name).unwrap()[0],
            rate.column(name).unwrap()[0],
            "{name}"
        );
    }
}

#[test]
fn efficiency_peaks_at_unit_cooperativity() {
    let (_d, t) = budget("cooperativity:0:2:41", "bin");
    let c = t.column("cooperativity").unwrap();
    let eta = t.column("eta_eo").unwrap();
    let k = (0..eta.len())
        .max_by(|&i, &j| eta[i].total_cmp(&eta[j]))
        .unwrap();
    assert!((c[k] - 1.0).abs() < 1e-12, "peak at C = {}", c[k]);
}

#[test]
fn binary_and_csv_agree() {
    let (_a, x) = budget("temperature:0.02:0.1:5", "csv");
    let (_b, y) = budget("temperature:0.02:0.1:5", "bin");
    assert_eq!(x, y);
}

#[test]
fn simulate_writes_both_states() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--scheme",
        "mw-mw",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (hg, tg) = read_csv(&dir.path().join("trace_g.csv")).unwrap();
    let (_, te) = read_csv(&dir.path().join("trace_e.csv")).unwrap();
    assert_eq!(tg.n_rows(), te.n_rows());
    assert!(hg.notes.iter().any(|(k, v)| k == "state" && v == "g"));
    // the two states are distinguishable in reflected power
    let pg = tg.column("power").unwrap();
    let pe = te.column("power").unwrap();
    let mid = pg.len() / 2;
    assert!((pg[mid] - pe[mid]).abs() > 1e-3 * pg[mid].max(pe[mid]));
    assert!(dir.path().join("steady.txt").exists());
}
