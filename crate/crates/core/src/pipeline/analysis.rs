//! Per-asset computations, one function per pipeline stage.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{derive_seed, AssetConfig, KappaSource, RunConfig};
use crate::data::{align_prices, load_prices, split, AlignedPair, Role, SampleSplit};
use crate::diagnostics::{self, SeriesDiagnostics};
use crate::effectiveness::{
    block_effectiveness, bootstrap_diff_test, effectiveness, paired_finite, risk_measures, DiffTest,
    Effectiveness, Measure, RiskMeasures,
};
use crate::error::{Error, Result};
use crate::garch::{self, CovSeed, EstimateOptions, EstimationResult, VechGarchParams};
use crate::hedging::{
    forecast_hedge, forecast_hedge_rolling, garch_hedge, hedged_portfolio, ols_hedge, ols_ratio,
    scaled_hedge, HedgeKind, HedgePath, Timing,
};
use crate::scaling::{dn_aggregate_vech, sample_kappa, sqrt_scale_sd};

/// How far [`analyze`] runs; later stages include the earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Diagnose,
    Estimate,
    Scale,
    Hedge,
    Evaluate,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Diagnose => "diagnose",
            Stage::Estimate => "estimate",
            Stage::Scale => "scale",
            Stage::Hedge => "hedge",
            Stage::Evaluate => "evaluate",
        }
    }
}

/// A value that may be undefined for the data at hand, with the reason.
pub type Outcome<T> = std::result::Result<T, String>;

#[derive(Debug, Clone)]
pub struct AssetData {
    pub label: String,
    pub daily: AlignedPair,
    pub split: SampleSplit,
}

/// Loads, aligns and splits one asset's price files.
pub fn load_asset(asset: &AssetConfig, split_date: NaiveDate) -> Result<AssetData> {
    let tag = |e: Error| e.in_stage(&asset.label, 1, "ingest");
    let cash = load_prices(&asset.cash, &asset.label, Role::Cash).map_err(tag)?;
    let fut = load_prices(&asset.futures, &asset.label, Role::Futures).map_err(tag)?;
    let daily = align_prices(&cash, &fut).map_err(tag)?;
    let split = split(&daily, split_date).map_err(tag)?;
    Ok(AssetData {
        label: asset.label.clone(),
        daily,
        split,
    })
}

/// One horizon's aggregated pair, split at the configured date.
#[derive(Debug, Clone)]
pub struct HorizonSample {
    pub h: usize,
    pub split: SampleSplit,
}

pub fn horizon_sample(data: &AssetData, h: usize) -> Result<HorizonSample> {
    let split = if h == 1 {
        data.split.clone()
    } else {
        let agg = data.daily.aggregate(h)?;
        split(&agg, data.split.split_date)?
    };
    Ok(HorizonSample { h, split })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsRow {
    pub h: usize,
    pub n: usize,
    pub cash: SeriesDiagnostics,
    pub futures: SeriesDiagnostics,
    pub correlation: f64,
    /// Base-frequency SDs (percent) scaled by the square root of `h`.
    pub sd_scaled_pct: Option<[f64; 2]>,
}

pub fn diagnose(sample: &HorizonSample) -> Result<DiagnosticsRow> {
    let est = &sample.split.estimation;
    Ok(DiagnosticsRow {
        h: sample.h,
        n: est.len(),
        cash: diagnostics::battery(est.cash().returns())?,
        futures: diagnostics::battery(est.futures().returns())?,
        correlation: diagnostics::correlation(est)?,
        sd_scaled_pct: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonFit {
    pub h: usize,
    pub fit: EstimationResult<VechGarchParams>,
}

pub fn estimation_options(cfg: &RunConfig, label: &str, h: usize) -> EstimateOptions {
    EstimateOptions {
        jitter_seed: derive_seed(cfg.seed(), &format!("estimate/{label}/h{h}")),
        ..EstimateOptions::default()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaledParams {
    pub h: usize,
    pub params: Outcome<VechGarchParams>,
}

/// Hedge paths of one horizon. Scaled kinds appear for `h > 1` only;
/// out-of-sample paths are empty when the holdout is.
#[derive(Debug, Clone)]
pub struct HedgeSet {
    pub h: usize,
    pub in_sample: Vec<HedgePath>,
    pub out_of_sample: Vec<HedgePath>,
}

impl HedgeSet {
    pub fn paths(&self, timing: Timing) -> &[HedgePath] {
        match timing {
            Timing::InSample => &self.in_sample,
            Timing::OutOfSample => &self.out_of_sample,
        }
    }

    pub fn find(&self, timing: Timing, kind: HedgeKind) -> Option<&HedgePath> {
        self.paths(timing).iter().find(|p| p.kind == kind)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EffCell {
    pub timing: Timing,
    pub h: usize,
    pub kind: HedgeKind,
    pub outcome: Outcome<EffValues>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EffValues {
    pub hedged: RiskMeasures,
    pub unhedged: RiskMeasures,
    pub reduction: Effectiveness,
}

/// Bootstrap comparison of scaled against actual hedges for one measure.
#[derive(Debug, Clone, Serialize)]
pub struct DiffCell {
    pub timing: Timing,
    pub h: usize,
    /// `Ols` or `Garch`; the scaled counterpart is implied.
    pub model: HedgeKind,
    pub measure: Measure,
    pub n_blocks: usize,
    pub outcome: Outcome<DiffTest>,
}

#[derive(Debug, Clone, Default)]
pub struct AssetReport {
    pub label: String,
    pub split_date: Option<NaiveDate>,
    pub kappa: Option<(f64, f64)>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub fits: Vec<HorizonFit>,
    pub scaled: Vec<ScaledParams>,
    pub hedges: Vec<HedgeSet>,
    pub effectiveness: Vec<EffCell>,
    pub tests: Vec<DiffCell>,
    /// Warnings worth surfacing next to the tables.
    pub notes: Vec<String>,
}

impl AssetReport {
    pub fn fit(&self, h: usize) -> Option<&HorizonFit> {
        self.fits.iter().find(|f| f.h == h)
    }

    pub fn scaled_params(&self, h: usize) -> Option<&ScaledParams> {
        self.scaled.iter().find(|s| s.h == h)
    }

    pub fn hedge_set(&self, h: usize) -> Option<&HedgeSet> {
        self.hedges.iter().find(|s| s.h == h)
    }

    pub fn eff(&self, timing: Timing, h: usize, kind: HedgeKind) -> Option<&EffCell> {
        self.effectiveness
            .iter()
            .find(|c| c.timing == timing && c.h == h && c.kind == kind)
    }

    pub fn test(&self, timing: Timing, h: usize, model: HedgeKind, measure: Measure) -> Option<&DiffCell> {
        self.tests
            .iter()
            .find(|c| c.timing == timing && c.h == h && c.model == model && c.measure == measure)
    }
}

fn na<T>(r: Result<T>, keep: impl Fn(&Error) -> bool) -> Result<Outcome<T>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if keep(e.root()) => Ok(Err(e.to_string())),
        Err(e) => Err(e),
    }
}

/// Runs the stages up to and including `upto` for one asset.
pub fn analyze(data: &AssetData, cfg: &RunConfig, upto: Stage) -> Result<AssetReport> {
    let label = data.label.as_str();
    let tagged = |h: usize, stage: &'static str| move |e: Error| e.in_stage(label, h, stage);
    let horizons = cfg.all_horizons();
    let samples: Vec<HorizonSample> = horizons
        .par_iter()
        .map(|&h| horizon_sample(data, h).map_err(tagged(h, "ingest")))
        .collect::<Result<_>>()?;
    let mut report = AssetReport {
        label: data.label.clone(),
        split_date: Some(data.split.split_date),
        ..AssetReport::default()
    };
    for s in &samples {
        if s.split.holdout.is_empty() {
            report.notes.push(format!("h={}: empty holdout sample", s.h));
        }
        let skipped = crate::data::leading_discard(data.daily.len(), s.h);
        if skipped > 0 {
            report.notes.push(format!(
                "h={}: {skipped} leading base observation(s) dropped to complete the final block",
                s.h
            ));
        }
    }

    let mut diag: Vec<DiagnosticsRow> = samples
        .par_iter()
        .map(|s| diagnose(s).map_err(tagged(s.h, "diagnose")))
        .collect::<Result<_>>()?;
    let base_sd = [diag[0].cash.moments.sd_pct, diag[0].futures.moments.sd_pct];
    for row in diag.iter_mut().filter(|r| r.h > 1) {
        row.sd_scaled_pct = Some(base_sd.map(|sd| sqrt_scale_sd(sd, row.h)));
    }
    report.diagnostics = diag;
    if upto == Stage::Diagnose {
        return Ok(report);
    }

    report.fits = samples
        .par_iter()
        .map(|s| {
            let opts = estimation_options(cfg, label, s.h);
            garch::estimate(&s.split.estimation, None, &opts)
                .map(|fit| HorizonFit { h: s.h, fit })
                .map_err(tagged(s.h, "estimate"))
        })
        .collect::<Result<_>>()?;
    for f in &report.fits {
        if !f.fit.converged {
            report.notes.push(format!(
                "h={}: estimation did not converge (gradient norm {:.2e})",
                f.h, f.fit.gradient_norm
            ));
        }
    }
    if upto == Stage::Estimate {
        return Ok(report);
    }

    let base = report.fits[0].fit.params;
    let est1 = &samples[0].split.estimation;
    let kappa = match cfg.kappa {
        KappaSource::Sample => (
            sample_kappa(est1.cash().returns()).map_err(tagged(1, "scale"))?,
            sample_kappa(est1.futures().returns()).map_err(tagged(1, "scale"))?,
        ),
        KappaSource::Override { cash, futures } => (cash, futures),
    };
    report.kappa = Some(kappa);
    for &h in horizons.iter().filter(|h| **h > 1) {
        let params = na(dn_aggregate_vech(&base, kappa.0, kappa.1, h), |e| {
            matches!(e, Error::NoRealRoot { .. } | Error::InvalidKappa(_))
        })
        .map_err(tagged(h, "scale"))?;
        if let Err(reason) = &params {
            report.notes.push(format!("h={h}: no aggregated parameters ({reason})"));
        }
        report.scaled.push(ScaledParams { h, params });
    }
    if upto == Stage::Scale {
        return Ok(report);
    }

    report.hedges = build_hedges(data, cfg, &samples, &report.fits)?;
    if upto == Stage::Hedge {
        return Ok(report);
    }

    let (eff, tests) = evaluate(cfg, label, &samples, &report.hedges)?;
    for c in &eff {
        if let Err(reason) = &c.outcome {
            report.notes.push(format!("h={} {} {}: {reason}", c.h, c.timing, c.kind));
        }
    }
    report.effectiveness = eff;
    report.tests = tests;
    Ok(report)
}

fn build_hedges(
    data: &AssetData,
    cfg: &RunConfig,
    samples: &[HorizonSample],
    fits: &[HorizonFit],
) -> Result<Vec<HedgeSet>> {
    let label = data.label.as_str();
    let est1 = &samples[0].split.estimation;
    let p1 = fits[0].fit.params;
    let full_dates = data.daily.dates();
    // base-frequency ratios over the whole sample, each formed from data
    // through the previous day with estimation-window parameters
    let base_ols = ols_ratio(est1)
        .and_then(|r| HedgePath::constant(full_dates, r, HedgeKind::Ols, 1))
        .map_err(|e| e.in_stage(label, 1, "hedge"))?;
    let base_garch = garch::filter_vech_seeded(&data.daily, &p1, CovSeed::from_pair(est1, &p1))
        .and_then(|path| garch_hedge(&path, 1))
        .map_err(|e| e.in_stage(label, 1, "hedge"))?;

    samples
        .par_iter()
        .zip(fits)
        .map(|(s, f)| {
            let h = s.h;
            let run = || -> Result<HedgeSet> {
                let (est, hold) = (&s.split.estimation, &s.split.holdout);
                let p = &f.fit.params;
                let ols_in = ols_hedge(est)?;
                let garch_in = garch_hedge(&garch::filter_vech(est, p)?, h)?;
                let mut in_sample = vec![ols_in.clone(), garch_in];
                let mut out_of_sample = Vec::new();
                if !hold.is_empty() {
                    let ratio = ols_in.ratios()[0];
                    out_of_sample.push(HedgePath::constant(hold.dates(), ratio, HedgeKind::Ols, h)?);
                    out_of_sample.push(match cfg.refit_every {
                        None => forecast_hedge(est, hold, p)?,
                        Some(k) => forecast_hedge_rolling(est, hold, k, &estimation_options(cfg, label, h))?,
                    });
                }
                if h > 1 {
                    for base in [&base_ols, &base_garch] {
                        in_sample.push(scaled_hedge(base, est.dates(), h)?);
                        if !hold.is_empty() {
                            out_of_sample.push(scaled_hedge(base, hold.dates(), h)?);
                        }
                    }
                }
                Ok(HedgeSet {
                    h,
                    in_sample,
                    out_of_sample,
                })
            };
            run().map_err(|e| e.in_stage(label, h, "hedge"))
        })
        .collect()
}

fn evaluate(
    cfg: &RunConfig,
    label: &str,
    samples: &[HorizonSample],
    hedges: &[HedgeSet],
) -> Result<(Vec<EffCell>, Vec<DiffCell>)> {
    let alpha = cfg.tail_alpha;
    let per_horizon: Vec<(Vec<EffCell>, Vec<DiffCell>)> = samples
        .par_iter()
        .zip(hedges)
        .map(|(s, set)| {
            let h = s.h;
            let run = || -> Result<(Vec<EffCell>, Vec<DiffCell>)> {
                let mut cells = Vec::new();
                let mut tests = Vec::new();
                for timing in [Timing::InSample, Timing::OutOfSample] {
                    let pair = match timing {
                        Timing::InSample => &s.split.estimation,
                        Timing::OutOfSample => &s.split.holdout,
                    };
                    if pair.is_empty() {
                        continue;
                    }
                    let cash = pair.cash().returns();
                    let unhedged = na(risk_measures(cash, alpha), |e| {
                        matches!(e, Error::TooShortForTail { .. })
                    })?;
                    let mut hedged_returns = Vec::new();
                    for path in set.paths(timing) {
                        let hr = hedged_portfolio(pair, path, timing)?;
                        let outcome = match &unhedged {
                            Ok(u) => {
                                let u = *u;
                                na(
                                    risk_measures(&hr.returns, alpha).and_then(|hm| {
                                        effectiveness(&hm, &u).map(|reduction| EffValues {
                                            hedged: hm,
                                            unhedged: u,
                                            reduction,
                                        })
                                    }),
                                    |e| matches!(e, Error::TooShortForTail { .. } | Error::ZeroBaselineRisk(_)),
                                )?
                            }
                            Err(reason) => Err(reason.clone()),
                        };
                        cells.push(EffCell {
                            timing,
                            h,
                            kind: path.kind,
                            outcome,
                        });
                        hedged_returns.push((path.kind, hr.returns));
                    }
                    if h > 1 {
                        tests.extend(difference_tests(cfg, label, timing, h, cash, &hedged_returns)?);
                    }
                }
                Ok((cells, tests))
            };
            run().map_err(|e| e.in_stage(label, h, "evaluate"))
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    let mut tests = Vec::new();
    for (c, t) in per_horizon {
        cells.extend(c);
        tests.extend(t);
    }
    Ok((cells, tests))
}

fn difference_tests(
    cfg: &RunConfig,
    label: &str,
    timing: Timing,
    h: usize,
    cash: &[f64],
    hedged: &[(HedgeKind, Vec<f64>)],
) -> Result<Vec<DiffCell>> {
    let block_len = cfg.block_len_for(h);
    let get = |k: HedgeKind| hedged.iter().find(|(kind, _)| *kind == k).map(|(_, r)| r.as_slice());
    let mut out = Vec::new();
    for model in [HedgeKind::Ols, HedgeKind::Garch] {
        let scaled_kind = model.scaled().expect("ols and garch scale");
        let (Some(actual), Some(scaled)) = (get(model), get(scaled_kind)) else {
            continue;
        };
        let too_few = |e: &Error| matches!(e, Error::TooFewBlocks { .. });
        let blocks = na(
            block_effectiveness(actual, cash, block_len, cfg.tail_alpha).and_then(|a| {
                block_effectiveness(scaled, cash, block_len, cfg.tail_alpha).map(|s| (a, s))
            }),
            too_few,
        )?;
        for measure in Measure::ALL {
            let (n_blocks, outcome) = match &blocks {
                Ok((a, s)) => {
                    let (sv, av) = paired_finite(s.series(measure), a.series(measure));
                    let seed = derive_seed(
                        cfg.seed(),
                        &format!("bootstrap/{label}/{timing}/h{h}/{model}/{}", measure.as_str()),
                    );
                    (sv.len(), na(bootstrap_diff_test(&sv, &av, cfg.n_resamples, seed), too_few)?)
                }
                Err(reason) => (0, Err(reason.clone())),
            };
            out.push(DiffCell {
                timing,
                h,
                model,
                measure,
                n_blocks,
                outcome,
            });
        }
    }
    Ok(out)
}
