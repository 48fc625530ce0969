use std::path::{Path, PathBuf};
use std::process::Command;

use hedgescale::pipeline::{self, RunConfig, Stage, MANIFEST};
use hedgescale::Error;
use sha2::{Digest, Sha256};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fixture_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(fixture_dir().join("run.toml")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hedgescale"))
}

#[test]
fn run_writes_every_artifact_and_a_matching_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let summary = pipeline::run(&fixture_config(tmp.path())).unwrap();
    assert_eq!(summary.reports.len(), 1);

    let expected = [
        "diagnostics.csv",
        "garch_params.csv",
        "hedge_ratios.csv",
        "effectiveness_in_sample.csv",
        "effectiveness_out_of_sample.csv",
        "difference_tests_in_sample.csv",
        "difference_tests_out_of_sample.csv",
        "hedge_paths_SIM_in_sample.csv",
        "hedge_paths_SIM_out_of_sample.csv",
        "notes.txt",
        MANIFEST,
    ];
    for name in expected {
        assert!(tmp.path().join(name).is_file(), "{name} missing");
    }

    // every csv parses with a consistent column count
    for f in &summary.files {
        if f.extension().is_some_and(|e| e == "csv") {
            let mut rdr = csv::Reader::from_path(f).unwrap();
            let width = rdr.headers().unwrap().len();
            let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
            assert!(!rows.is_empty(), "{} is empty", f.display());
            assert!(rows.iter().all(|r| r.len() == width), "{} is ragged", f.display());
        }
    }

    // manifest hashes match the files on disk
    let manifest: toml::Value = toml::from_str(&std::fs::read_to_string(tmp.path().join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest["seed"].as_integer(), Some(42));
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), summary.files.len() - 1);
    for entry in files {
        let name = entry["name"].as_str().unwrap();
        let bytes = std::fs::read(tmp.path().join(name)).unwrap();
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(entry["sha256"].as_str().unwrap(), digest, "{name}");
        assert!(!entry["producer"].as_str().unwrap().is_empty());
    }
    assert!(!std::fs::read_dir(tmp.path())
        .unwrap()
        .any(|e| e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn report_covers_each_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    let reports = pipeline::analyze_all(&fixture_config(tmp.path()), Stage::Evaluate).unwrap();
    let r = &reports[0];
    let hs: Vec<usize> = r.diagnostics.iter().map(|d| d.h).collect();
    assert_eq!(hs, vec![1, 5, 20]);
    assert_eq!(r.fits.len(), 3);
    // correlation of the simulated legs is high at every horizon
    assert!(r.diagnostics.iter().all(|d| d.correlation > 0.9));
    // in-sample tests exist for every scaled horizon, model and measure
    assert_eq!(r.tests.iter().filter(|t| t.timing == hedgescale::hedging::Timing::InSample).count(), 2 * 2 * 3);
}

#[test]
fn in_process_runs_are_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture_config(tmp.path());
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let reports = pipeline::analyze_all(&cfg, Stage::Evaluate).unwrap();
            pipeline::render(&cfg, &reports).unwrap()
        })
    };
    assert_eq!(render(1), render(4));
}

#[test]
fn missing_futures_file_fails_at_ingest() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(&tmp.path().join("out"));
    cfg.assets[0].futures = tmp.path().join("absent.csv");
    let err = pipeline::run(&cfg).unwrap_err();
    assert_eq!(err.stage(), Some("ingest"));
    assert!(matches!(err.root(), Error::MissingFile(p) if p.ends_with("absent.csv")));
    assert!(!tmp.path().join("out").exists(), "nothing is written on failure");
}

#[test]
fn missing_seed_is_rejected() {
    let mut cfg = fixture_config(Path::new("unused"));
    cfg.seed = None;
    assert!(matches!(pipeline::run(&cfg), Err(Error::Config(_))));
}

#[test]
fn cli_run_all_and_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture_dir().join("run.toml");
    let out = tmp.path().join("out");
    let o = bin()
        .args(["run-all", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join(MANIFEST).is_file());

    let o = bin().args(["diagnose", "--config"]).arg(&cfg).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("SIM"));

    let params = tmp.path().join("params");
    let o = bin()
        .args(["estimate", "--horizons", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&params)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p1 = params.join("params_SIM_h1.csv");
    assert!(p1.is_file());

    let o = bin()
        .args(["scale", "--kappa-cash", "5.87", "--kappa-futures", "5.29", "--horizons", "5,20", "--params"])
        .arg(&p1)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("horizon,parameter,value"));
    assert!(text.contains("20,persistence_s,"));
}

#[test]
fn cli_reports_tagged_errors_with_nonzero_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run-all", "--seed", "1", "--split-date", "2003-03-17", "--cash"])
        .arg(fixture_dir().join("sim_cash.csv"))
        .arg("--futures")
        .arg(tmp.path().join("nope.csv"))
        .arg("--output-dir")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("stage=ingest") && err.contains("missing file"), "{err}");

    // bootstrap commands refuse to run without a seed
    let o = bin()
        .args(["evaluate", "--split-date", "2003-03-17", "--cash"])
        .arg(fixture_dir().join("sim_cash.csv"))
        .arg("--futures")
        .arg(fixture_dir().join("sim_futures.csv"))
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn cli_simulate_fixture_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    for d in ["a", "b"] {
        let o = bin()
            .args(["simulate-fixture", "--obs", "300", "--seed", "5", "--label", "x", "--out-dir"])
            .arg(tmp.path().join(d))
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    for f in ["x_cash.csv", "x_futures.csv"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b);
        assert_eq!(String::from_utf8(a).unwrap().lines().count(), 302);
    }
}
