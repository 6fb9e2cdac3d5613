//! End-to-end runs of the experiment harness and the command-line tool.
//!
//! The golden summary under `tests/golden/` was produced by this crate and
//! pinned; set `PURSUITLAB_BLESS=1` to regenerate it after an intended change.

use std::path::{Path, PathBuf};
use std::process::Command;

use pursuitlab::harness::{self, output, ConfigOverrides, ExperimentConfig, Schedule};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn smoke_config() -> ExperimentConfig {
    let text = std::fs::read_to_string(golden_dir().join("smoke.cfg")).unwrap();
    harness::parse_config(&text, &ConfigOverrides::default()).unwrap()
}

fn summary_csv(cfg: &ExperimentConfig, schedule: Schedule, dir: &Path) -> String {
    let out = harness::run_experiment_with(cfg, schedule, |_| Ok(())).unwrap();
    let path = dir.join("summary.csv");
    harness::write_csv(&out.summaries, &path).unwrap();
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn smoke_summary_matches_golden_file() {
    let cfg = smoke_config();
    let dir = tempfile::tempdir().unwrap();
    let csv = summary_csv(&cfg, Schedule::Serial, dir.path());
    let golden = golden_dir().join("smoke_summary.csv");
    if std::env::var_os("PURSUITLAB_BLESS").is_some() {
        std::fs::write(&golden, &csv).unwrap();
    }
    assert_eq!(csv, std::fs::read_to_string(golden).unwrap());

    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], output::SUMMARY_HEADER.join(","));
    assert_eq!(lines.len(), 1 + 2 * 3 * 7);
    assert!(lines.iter().all(|l| l.split(',').count() == 12));
    assert!(!csv.contains('\r'));
}

#[test]
fn serial_and_parallel_schedules_agree() {
    let cfg = smoke_config();
    let dir = tempfile::tempdir().unwrap();
    let serial = summary_csv(&cfg, Schedule::Serial, dir.path());
    let parallel = summary_csv(&cfg, Schedule::Parallel(3), dir.path());
    assert_eq!(serial, parallel);

    let a = harness::run_experiment_with(&cfg, Schedule::Parallel(2), |_| Ok(())).unwrap();
    let (sa, sb) = (dir.path().join("a"), dir.path().join("b"));
    let pa = harness::write_svg_plots(&a.summaries, &sa).unwrap();
    let pb = harness::write_svg_plots(&a.summaries, &sb).unwrap();
    assert_eq!(pa.len(), 4);
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}

#[test]
fn summaries_match_recomputation_from_trial_records() {
    let mut cfg = smoke_config();
    cfg.keep_trials = true;
    let out = harness::run_experiment(&cfg).unwrap();
    let records = out.records.unwrap();
    assert_eq!(records.len(), out.summaries.len() * cfg.trials);
    for s in &out.summaries {
        let cell: Vec<_> = records
            .iter()
            .filter(|r| r.m == s.m && r.snr_db == s.snr_db && r.algorithm == s.algorithm && r.params == s.params)
            .collect();
        assert_eq!(cell.len(), s.trials);
        let n = cell.len() as f64;
        let mean = cell.iter().map(|r| r.metrics.nrmse).sum::<f64>() / n;
        let var = cell.iter().map(|r| (r.metrics.nrmse - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let size = cell.iter().map(|r| r.metrics.support_size as f64).sum::<f64>() / n;
        let exact = cell.iter().filter(|r| r.metrics.exact_support).count() as f64 / n;
        let iters = cell.iter().map(|r| r.metrics.iterations as f64).sum::<f64>() / n;
        assert!((mean - s.nrmse_mean).abs() <= 1e-12);
        assert!((var.sqrt() - s.nrmse_std).abs() <= 1e-12);
        assert!((size - s.support_size_mean).abs() <= 1e-12);
        assert!((exact - s.exact_support_rate).abs() <= 1e-12);
        assert!((iters - s.iterations_mean).abs() <= 1e-12);
        assert!((0.0..=1.0).contains(&s.support_recovered_rate) && s.nrmse_std >= 0.0);
    }
}

#[test]
fn trials_are_reproducible_in_isolation() {
    let cfg = smoke_config();
    let alg = &cfg.algorithms[4];
    let a = harness::run_trial(&cfg, 24, Some(10.0), alg, 3).unwrap();
    let b = harness::run_trial(&cfg, 24, Some(10.0), alg, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fixed_tau_variant_uses_the_published_threshold() {
    let cfg = smoke_config();
    let tau = cfg.algorithms[2].params();
    assert!(tau.contains("stop=tau:0.128062484"), "{tau}");
    assert_eq!(output::format_sig9(0.0164f64.sqrt()), "0.128062485");
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pursuitlab"))
}

#[test]
fn cli_run_writes_csv_svg_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let status = cli()
        .args(["run", "--config"])
        .arg(golden_dir().join("smoke.cfg"))
        .arg("--out")
        .arg(dir.path())
        .args(["--threads", "2", "--format", "both", "--keep-trials"])
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let golden = std::fs::read_to_string(golden_dir().join("smoke_summary.csv")).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("summary.csv")).unwrap(), golden);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("config_sha256 = ") && manifest.contains("master_seed = 7"));
    let svgs = std::fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")).count();
    assert_eq!(svgs, 4);
    let trials = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 42 * 5);
}

#[test]
fn cli_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let status = cli()
        .args(["run", "--config"])
        .arg(golden_dir().join("smoke.cfg"))
        .arg("--out")
        .arg(dir.path())
        .args(["--trials", "2", "--seed", "9", "--algorithms", "omp", "--format", "csv"])
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("OMP,") && l.split(',').nth(4) == Some("2")));
    assert!(!dir.path().join("fig_m16_nrmse.svg").exists());
}

#[test]
fn cli_rejects_invalid_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "k = 300\n").unwrap();
    let out = cli().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("k"));

    std::fs::write(&cfg, "trials = 3\nbogus = 1\n").unwrap();
    let out = cli().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn cli_ric_prints_nondecreasing_constants() {
    let out = cli().args(["ric", "--rows", "8", "--cols", "12", "--k", "3", "--seed", "4"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let deltas: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(deltas.len(), 3);
    assert!(deltas.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn cli_verify_bounds_succeeds() {
    for which in ["tikhonov", "landweber"] {
        let out = cli().args(["verify-bounds", "--which", which, "--instances", "10"]).output().unwrap();
        assert!(out.status.success(), "{which}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("10/10"));
    }
}
