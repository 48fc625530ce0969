//! Configuration-driven runner: ingest, diagnose, estimate, scale, hedge and
//! evaluate every configured asset, then write the result tables.

mod analysis;
mod config;
mod report;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use analysis::{
    analyze, diagnose, estimation_options, horizon_sample, load_asset, AssetData, AssetReport, DiagnosticsRow,
    DiffCell, EffCell, EffValues, HedgeSet, HorizonFit, HorizonSample, Outcome, ScaledParams, Stage,
};
pub use config::{derive_seed, AssetConfig, KappaSource, RunConfig};
pub use report::{
    diagnostics_csv, diagnostics_txt, effectiveness_csv, effectiveness_txt, notes_txt, ohr_csv, ohr_txt,
    params_csv, params_txt, paths_csv, tests_csv, tests_txt,
};

use crate::error::{Error, Result};
use crate::hedging::Timing;

pub const MANIFEST: &str = "manifest.toml";

/// One output file and the operation whose results it holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub producer: &'static str,
    pub contents: String,
}

impl Artifact {
    fn new(name: impl Into<String>, producer: &'static str, contents: String) -> Self {
        Self {
            name: name.into(),
            producer,
            contents,
        }
    }
}

/// Loads and analyzes every asset up to `upto`, in configuration order.
pub fn analyze_all(cfg: &RunConfig, upto: Stage) -> Result<Vec<AssetReport>> {
    cfg.validate()?;
    cfg.assets
        .par_iter()
        .map(|a| {
            let data = load_asset(a, cfg.split_date)?;
            analyze(&data, cfg, upto)
        })
        .collect()
}

/// Renders the full artifact set from completed reports.
pub fn render(cfg: &RunConfig, reports: &[AssetReport]) -> Result<Vec<Artifact>> {
    let mut out = vec![
        Artifact::new("diagnostics.csv", "diagnostics::battery", diagnostics_csv(reports)?),
        Artifact::new("diagnostics.txt", "diagnostics::battery", diagnostics_txt(reports)),
        Artifact::new("garch_params.csv", "garch::estimate, scaling::dn_aggregate_vech", params_csv(reports)?),
        Artifact::new("garch_params.txt", "garch::estimate, scaling::dn_aggregate_vech", params_txt(reports)),
        Artifact::new("hedge_ratios.csv", "hedging::garch_hedge, hedging::ols_hedge, hedging::scaled_hedge", ohr_csv(reports)?),
        Artifact::new("hedge_ratios.txt", "hedging::garch_hedge, hedging::ols_hedge, hedging::scaled_hedge", ohr_txt(reports)),
    ];
    for (timing, eff_name, test_name) in [
        (Timing::InSample, "effectiveness_in_sample", "difference_tests_in_sample"),
        (Timing::OutOfSample, "effectiveness_out_of_sample", "difference_tests_out_of_sample"),
    ] {
        let producer = "effectiveness::risk_measures, effectiveness::effectiveness";
        out.push(Artifact::new(format!("{eff_name}.csv"), producer, effectiveness_csv(reports, timing)?));
        out.push(Artifact::new(format!("{eff_name}.txt"), producer, effectiveness_txt(reports, timing, cfg.tail_alpha)));
        let producer = "effectiveness::block_effectiveness, effectiveness::bootstrap_diff_test";
        out.push(Artifact::new(format!("{test_name}.csv"), producer, tests_csv(reports, timing)?));
        out.push(Artifact::new(format!("{test_name}.txt"), producer, tests_txt(reports, timing)));
    }
    for r in reports {
        for (timing, suffix) in [(Timing::InSample, "in_sample"), (Timing::OutOfSample, "out_of_sample")] {
            out.push(Artifact::new(
                format!("hedge_paths_{}_{suffix}.csv", r.label),
                "hedging::garch_hedge, hedging::forecast_hedge, hedging::scaled_hedge",
                paths_csv(r, timing)?,
            ));
        }
    }
    out.push(Artifact::new("notes.txt", "pipeline::analyze", notes_txt(reports)));
    out.push(manifest(cfg, &out));
    Ok(out)
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    name: &'a str,
    producer: &'a str,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    software: &'static str,
    version: &'static str,
    seed: u64,
    config_hash: String,
    files: Vec<ManifestFile<'a>>,
}

fn manifest(cfg: &RunConfig, files: &[Artifact]) -> Artifact {
    let m = Manifest {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed(),
        config_hash: cfg.hash(),
        files: files
            .iter()
            .map(|a| ManifestFile {
                name: &a.name,
                producer: a.producer,
                sha256: config::hex(&Sha256::digest(a.contents.as_bytes())),
            })
            .collect(),
    };
    Artifact::new(MANIFEST, "pipeline::run", toml::to_string(&m).expect("manifest serializes"))
}

/// Writes each artifact through a temporary file and a rename. If any write
/// fails, every file written by this call is removed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        match write_atomic(dir, &a.name, a.contents.as_bytes()) {
            Ok(p) => written.push(p),
            Err(e) => {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                return Err(e);
            }
        }
    }
    Ok(written)
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, &target));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(&target, e));
    }
    Ok(target)
}

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub reports: Vec<AssetReport>,
}

/// Runs every stage for every asset and writes the artifact set to
/// `cfg.output_dir`. Nothing is written unless all computations succeed.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let reports = analyze_all(cfg, Stage::Evaluate)?;
    let artifacts = render(cfg, &reports)?;
    let files = write_artifacts(&cfg.output_dir, &artifacts)?;
    Ok(RunSummary {
        output_dir: cfg.output_dir.clone(),
        files,
        reports,
    })
}
