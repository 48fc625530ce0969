use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use hedgescale::fixtures::{cointegrated_fixture, simulate_fixture, CointegratedSpec};
use hedgescale::garch::{parse_kv, vech_from_estimates, VechGarchParams};
use hedgescale::hedging::Timing;
use hedgescale::pipeline::{self, AssetConfig, KappaSource, RunConfig, Stage};
use hedgescale::scaling::dn_aggregate_vech;
use hedgescale::{Error, Result};

#[derive(Parser)]
#[command(name = "hedgescale", version, about = "Multi-horizon futures hedging: estimation, scaling and effectiveness")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Descriptive statistics and tests per horizon.
    Diagnose(DataArgs),
    /// Fit the VECH GARCH model at each horizon.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        /// Also write one parameter file per asset and horizon here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate base-frequency parameters to longer horizons.
    Scale {
        #[command(flatten)]
        data: DataArgs,
        /// Parameter file written by `estimate`; skips estimation.
        #[arg(long, requires_all = ["kappa_cash", "kappa_futures"], conflicts_with_all = ["config", "cash", "futures"])]
        params: Option<PathBuf>,
    },
    /// Hedge-ratio paths and their statistics.
    Hedge {
        #[command(flatten)]
        data: DataArgs,
        /// Write the hedge-ratio paths here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hedging effectiveness and difference tests.
    Evaluate(DataArgs),
    /// Full pipeline, writing every table to the output directory.
    RunAll(DataArgs),
    /// Write a simulated cash/futures price pair.
    SimulateFixture {
        #[arg(long)]
        out_dir: PathBuf,
        /// Number of returns; each file gets one more price row.
        #[arg(long, default_value_t = 2601)]
        obs: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "sim")]
        label: String,
        /// Parameter file written by `estimate`; defaults to FTSE-like values.
        #[arg(long, conflicts_with = "cointegrated")]
        params: Option<PathBuf>,
        /// Common random walk plus transitory noise instead of GARCH.
        #[arg(long)]
        cointegrated: bool,
    },
}

#[derive(Args, Clone)]
struct DataArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cash price file (`date,price`), used without --config.
    #[arg(long, requires = "futures")]
    cash: Option<PathBuf>,
    /// Futures price file.
    #[arg(long, requires = "cash")]
    futures: Option<PathBuf>,
    #[arg(long, default_value = "asset")]
    label: String,
    /// Last date of the estimation sample (YYYY-MM-DD).
    #[arg(long)]
    split_date: Option<NaiveDate>,
    /// Comma-separated horizons in base periods.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tail_alpha: Option<f64>,
    #[arg(long)]
    n_resamples: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Kurtosis overrides for aggregation (both legs).
    #[arg(long, requires = "kappa_futures")]
    kappa_cash: Option<f64>,
    #[arg(long, requires = "kappa_cash")]
    kappa_futures: Option<f64>,
}

impl DataArgs {
    /// Config file (if any) with flags applied on top.
    fn config(&self, seed_required: bool) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => {
                let (Some(cash), Some(futures)) = (&self.cash, &self.futures) else {
                    return Err(Error::Config("give --config or both --cash and --futures".into()));
                };
                let split = self
                    .split_date
                    .ok_or_else(|| Error::Config("--split-date is required without --config".into()))?;
                let asset = AssetConfig {
                    label: self.label.clone(),
                    cash: cash.clone(),
                    futures: futures.clone(),
                };
                let mut cfg = RunConfig::new(vec![asset], split, 0);
                cfg.seed = if seed_required { None } else { Some(0) };
                cfg
            }
        };
        if let Some(d) = self.split_date {
            cfg.split_date = d;
        }
        if let Some(h) = &self.horizons {
            cfg.horizons = h.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(a) = self.tail_alpha {
            cfg.tail_alpha = a;
        }
        if let Some(n) = self.n_resamples {
            cfg.n_resamples = n;
        }
        if let Some(o) = &self.output_dir {
            cfg.output_dir = o.clone();
        }
        if let (Some(cash), Some(futures)) = (self.kappa_cash, self.kappa_futures) {
            cfg.kappa = KappaSource::Override { cash, futures };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_params(path: &Path) -> Result<VechGarchParams> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    vech_from_estimates(&parse_kv(&text)?)
}

fn tag(stage: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        e @ Error::Stage { .. } => e,
        e => e.in_stage("-", 0, stage),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Diagnose(args) => {
            let cfg = args.config(false).map_err(tag("config"))?;
            let reports = pipeline::analyze_all(&cfg, Stage::Diagnose)?;
            print!("{}", pipeline::diagnostics_txt(&reports));
        }
        Command::Estimate { data, out } => {
            let cfg = data.config(false).map_err(tag("config"))?;
            let reports = pipeline::analyze_all(&cfg, Stage::Estimate)?;
            print!("{}", pipeline::params_txt(&reports));
            if let Some(dir) = out {
                let artifacts: Vec<pipeline::Artifact> = reports
                    .iter()
                    .flat_map(|r| {
                        r.fits.iter().map(|f| pipeline::Artifact {
                            name: format!("params_{}_h{}.csv", r.label, f.h),
                            producer: "garch::estimate",
                            contents: f.fit.to_kv_string(),
                        })
                    })
                    .collect();
                for p in pipeline::write_artifacts(&dir, &artifacts).map_err(tag("estimate"))? {
                    println!("wrote {}", p.display());
                }
            }
        }
        Command::Scale { data, params } => match params {
            Some(path) => {
                let p = read_params(&path).map_err(tag("scale"))?;
                let (ks, kf) = (data.kappa_cash.unwrap_or(3.0), data.kappa_futures.unwrap_or(3.0));
                let horizons = data.horizons.clone().unwrap_or_else(|| vec![5, 20]);
                println!("horizon,parameter,value");
                for h in horizons {
                    let q = dn_aggregate_vech(&p, ks, kf, h).map_err(|e| e.in_stage("-", h, "scale"))?;
                    for (name, v) in hedgescale::garch::VECH_PARAM_NAMES.iter().zip(q.to_vec()) {
                        println!("{h},{name},{v:.6e}");
                    }
                    println!("{h},persistence_s,{:.4}", q.s.persistence());
                    println!("{h},persistence_f,{:.4}", q.f.persistence());
                }
            }
            None => {
                let cfg = data.config(false).map_err(tag("config"))?;
                let reports = pipeline::analyze_all(&cfg, Stage::Scale)?;
                print!("{}", pipeline::params_txt(&reports));
            }
        },
        Command::Hedge { data, out } => {
            let cfg = data.config(false).map_err(tag("config"))?;
            let reports = pipeline::analyze_all(&cfg, Stage::Hedge)?;
            print!("{}", pipeline::ohr_txt(&reports));
            if let Some(dir) = out {
                let mut artifacts = Vec::new();
                for r in &reports {
                    for (timing, suffix) in [(Timing::InSample, "in_sample"), (Timing::OutOfSample, "out_of_sample")] {
                        artifacts.push(pipeline::Artifact {
                            name: format!("hedge_paths_{}_{suffix}.csv", r.label),
                            producer: "hedging",
                            contents: pipeline::paths_csv(r, timing)?,
                        });
                    }
                }
                for p in pipeline::write_artifacts(&dir, &artifacts).map_err(tag("hedge"))? {
                    println!("wrote {}", p.display());
                }
            }
        }
        Command::Evaluate(args) => {
            let cfg = args.config(true).map_err(tag("config"))?;
            let reports = pipeline::analyze_all(&cfg, Stage::Evaluate)?;
            for timing in [Timing::InSample, Timing::OutOfSample] {
                print!("{}", pipeline::effectiveness_txt(&reports, timing, cfg.tail_alpha));
                print!("{}", pipeline::tests_txt(&reports, timing));
            }
        }
        Command::RunAll(args) => {
            let cfg = args.config(true).map_err(tag("config"))?;
            let summary = pipeline::run(&cfg)?;
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            for r in &summary.reports {
                for n in &r.notes {
                    log::warn!("{}: {n}", r.label);
                }
            }
        }
        Command::SimulateFixture {
            out_dir,
            obs,
            seed,
            label,
            params,
            cointegrated,
        } => {
            let files = if cointegrated {
                cointegrated_fixture(&CointegratedSpec::default(), obs, seed, &out_dir, &label)
            } else {
                let p = match params {
                    Some(path) => read_params(&path),
                    None => Ok(VechGarchParams::ftse_like()),
                };
                p.and_then(|p| simulate_fixture(&p, obs, seed, &out_dir, &label))
            }
            .map_err(tag("simulate-fixture"))?;
            println!("wrote {}", files.cash.display());
            println!("wrote {}", files.futures.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
