//! Hedge-ratio paths (constant OLS, time-varying GARCH, scaled from a base
//! frequency, naive) and the hedged portfolio `r_s - beta_t * r_f`.

use std::fmt;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::AlignedPair;
use crate::error::{Error, Result};
use crate::garch::{self, CovSeed, CovariancePath, EstimateOptions, VechGarchParams};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HedgeKind {
    Ols,
    Garch,
    ScaledOls,
    ScaledGarch,
    Naive,
}

impl HedgeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HedgeKind::Ols => "ols",
            HedgeKind::Garch => "garch",
            HedgeKind::ScaledOls => "scaled-ols",
            HedgeKind::ScaledGarch => "scaled-garch",
            HedgeKind::Naive => "naive",
        }
    }

    /// Kind of a path scaled from this one.
    pub fn scaled(&self) -> Option<HedgeKind> {
        match self {
            HedgeKind::Ols => Some(HedgeKind::ScaledOls),
            HedgeKind::Garch => Some(HedgeKind::ScaledGarch),
            _ => None,
        }
    }
}

impl fmt::Display for HedgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    InSample,
    OutOfSample,
}

impl fmt::Display for Timing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Timing::InSample => "in-sample",
            Timing::OutOfSample => "out-of-sample",
        })
    }
}

/// One hedge ratio per target-frequency date. The ratio dated `t` is the
/// one applied to the return ending at `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HedgePath {
    dates: Vec<NaiveDate>,
    ratios: Vec<f64>,
    pub kind: HedgeKind,
    pub horizon_h: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl HedgePath {
    pub fn new(dates: Vec<NaiveDate>, ratios: Vec<f64>, kind: HedgeKind, horizon_h: usize) -> Result<Self> {
        if dates.len() != ratios.len() {
            return Err(Error::DateMismatch(format!(
                "{} dates for {} ratios",
                dates.len(),
                ratios.len()
            )));
        }
        if let Some(i) = ratios.iter().position(|r| !r.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite hedge ratio on {}", dates[i])));
        }
        if horizon_h == 0 {
            return Err(Error::Config("hedge horizon must be >= 1".into()));
        }
        Ok(Self {
            dates,
            ratios,
            kind,
            horizon_h,
        })
    }

    pub fn constant(dates: &[NaiveDate], ratio: f64, kind: HedgeKind, horizon_h: usize) -> Result<Self> {
        Self::new(dates.to_vec(), vec![ratio; dates.len()], kind, horizon_h)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    /// `kind-hN`, e.g. `scaled-garch-h5`.
    pub fn id(&self) -> String {
        format!("{}-h{}", self.kind, self.horizon_h)
    }

    pub fn summary(&self) -> PathSummary {
        let (min, max) = stats::min_max(&self.ratios);
        PathSummary {
            n: self.len(),
            mean: stats::mean(&self.ratios),
            sd: if self.len() > 1 {
                stats::std_dev_sample(&self.ratios)
            } else {
                0.0
            },
            min,
            max,
        }
    }

    /// Restricts to dates in `[from, to]`.
    pub fn between(&self, from: NaiveDate, to: NaiveDate) -> Self {
        let lo = self.dates.partition_point(|d| *d < from);
        let hi = self.dates.partition_point(|d| *d <= to);
        Self {
            dates: self.dates[lo..hi].to_vec(),
            ratios: self.ratios[lo..hi].to_vec(),
            kind: self.kind,
            horizon_h: self.horizon_h,
        }
    }
}

/// Writes `date,ratio,kind,horizon` rows for each path.
pub fn write_paths_csv<W: Write>(out: W, paths: &[&HedgePath]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Config(format!("csv write: {e}"));
    w.write_record(["date", "ratio", "kind", "horizon"]).map_err(csv_err)?;
    for p in paths {
        for (d, r) in p.dates.iter().zip(&p.ratios) {
            w.write_record([
                d.format("%Y-%m-%d").to_string(),
                r.to_string(),
                p.kind.to_string(),
                p.horizon_h.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Config(format!("csv write: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HedgedReturns {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    /// Identifier of the hedge path and timing that produced these returns.
    pub source: String,
}

/// Minimum-variance constant ratio `cov(r_s, r_f) / var(r_f)`, the slope of
/// the regression of cash on futures returns.
pub fn ols_ratio(pair: &AlignedPair) -> Result<f64> {
    let rs = pair.cash().returns();
    let rf = pair.futures().returns();
    if rs.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: rs.len(),
        });
    }
    let var_f = stats::variance_sample(rf);
    if !(var_f > 0.0) {
        return Err(Error::DegenerateVariance("futures returns are constant".into()));
    }
    Ok(stats::covariance_sample(rs, rf) / var_f)
}

pub fn ols_hedge(pair: &AlignedPair) -> Result<HedgePath> {
    let beta = ols_ratio(pair)?;
    HedgePath::constant(pair.dates(), beta, HedgeKind::Ols, pair.frequency_h())
}

/// `H_sf[t] / H_f[t]` along a filtered covariance path.
pub fn garch_hedge(path: &CovariancePath, horizon_h: usize) -> Result<HedgePath> {
    let ratios = path.hsf.iter().zip(&path.hf).map(|(c, v)| c / v).collect();
    HedgePath::new(path.dates.clone(), ratios, HedgeKind::Garch, horizon_h)
}

pub fn naive_hedge(dates: &[NaiveDate], horizon_h: usize) -> Result<HedgePath> {
    HedgePath::constant(dates, 1.0, HedgeKind::Naive, horizon_h)
}

/// Maps a base-frequency path onto `h`-period target dates.
///
/// Square-root scaling multiplies variance and covariance by the same factor,
/// so the ratio itself is unchanged; what scaling decides is which base ratio
/// applies to each period. Each target period takes the base ratio dated at
/// its first base date, the ratio in force when the period opens. Period `k`
/// starts after target date `k - 1`; the first period spans the `h` base
/// dates ending at the first target date.
pub fn scaled_hedge(base: &HedgePath, target_dates: &[NaiveDate], h: usize) -> Result<HedgePath> {
    let kind = base.kind.scaled().ok_or_else(|| {
        Error::Config(format!("can only scale ols or garch paths, not {}", base.kind))
    })?;
    if base.horizon_h != 1 {
        return Err(Error::FrequencyMismatch(1, base.horizon_h));
    }
    if h == 0 {
        return Err(Error::Config("aggregation horizon must be >= 1".into()));
    }
    let bd = &base.dates;
    let mut ratios = Vec::with_capacity(target_dates.len());
    for (k, &target) in target_dates.iter().enumerate() {
        // base dates at or before the target
        let upto = bd.partition_point(|d| *d <= target);
        let start = if k == 0 {
            upto.checked_sub(h)
        } else {
            let prev = target_dates[k - 1];
            if prev >= target {
                return Err(Error::DateMismatch(format!("target dates not increasing at {target}")));
            }
            Some(bd.partition_point(|d| *d <= prev))
        };
        match start {
            Some(i) if i < upto => ratios.push(base.ratios[i]),
            _ => return Err(Error::NoPrecedingBaseDate(target)),
        }
    }
    HedgePath::new(target_dates.to_vec(), ratios, kind, h)
}

/// `r_s[t] - beta_t * r_f[t]`.
///
/// Paths are applied date by date. For out-of-sample timing the path must hold
/// forecasts: the ratio dated `t` formed from information through `t - 1`, as
/// built by [`forecast_hedge`]. Constant paths are the same under both timings.
pub fn hedged_portfolio(pair: &AlignedPair, hp: &HedgePath, timing: Timing) -> Result<HedgedReturns> {
    if pair.dates() != hp.dates() {
        return Err(Error::DateMismatch(format!(
            "hedge path {} has {} dates, pair has {}",
            hp.id(),
            hp.len(),
            pair.len()
        )));
    }
    if pair.frequency_h() != hp.horizon_h {
        return Err(Error::FrequencyMismatch(pair.frequency_h(), hp.horizon_h));
    }
    let returns = pair
        .cash()
        .returns()
        .iter()
        .zip(pair.futures().returns())
        .zip(&hp.ratios)
        .map(|((s, f), b)| s - b * f)
        .collect();
    Ok(HedgedReturns {
        dates: pair.dates().to_vec(),
        returns,
        source: format!("{}-{}", hp.id(), timing),
    })
}

/// One-step-ahead GARCH hedge ratios over `holdout` with parameters held at
/// their estimation-window values.
///
/// The recursion runs from the start of `history` (seeded at its sample
/// moments) through the holdout, so the ratio dated `t` is exactly the
/// one-step forecast from data through `t - 1`.
pub fn forecast_hedge(history: &AlignedPair, holdout: &AlignedPair, params: &VechGarchParams) -> Result<HedgePath> {
    let full = history.concat(holdout)?;
    let seed = CovSeed::from_pair(history, params);
    let path = garch::filter_vech_seeded(&full, params, seed)?;
    let tail = path.tail(holdout.len());
    garch_hedge(&tail, holdout.frequency_h())
}

/// Like [`forecast_hedge`] but re-estimates on the expanding window every
/// `refit_every` holdout observations.
pub fn forecast_hedge_rolling(
    history: &AlignedPair,
    holdout: &AlignedPair,
    refit_every: usize,
    opts: &EstimateOptions,
) -> Result<HedgePath> {
    if refit_every == 0 {
        return Err(Error::Config("refit interval must be >= 1".into()));
    }
    let full = history.concat(holdout)?;
    let n_hist = history.len();
    let mut dates = Vec::with_capacity(holdout.len());
    let mut ratios = Vec::with_capacity(holdout.len());
    let mut start = 0;
    while start < holdout.len() {
        let end = (start + refit_every).min(holdout.len());
        let window = full.between(full.dates()[0], full.dates()[n_hist + start - 1]);
        let fit = garch::estimate(&window, None, opts)?;
        let upto = full.between(full.dates()[0], full.dates()[n_hist + end - 1]);
        let seed = CovSeed::from_pair(history, &fit.params);
        let path = garch::filter_vech_seeded(&upto, &fit.params, seed)?;
        let block = path.tail(end - start);
        dates.extend_from_slice(&block.dates);
        ratios.extend(block.hsf.iter().zip(&block.hf).map(|(c, v)| c / v));
        start = end;
    }
    HedgePath::new(dates, ratios, HedgeKind::Garch, holdout.frequency_h())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{business_days, ReturnSeries};
    use crate::garch::{filter_vech, forecast_one_step, simulate};
    use crate::linalg::ols;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn pair_of(rs: Vec<f64>, rf: Vec<f64>) -> AlignedPair {
        let dates = business_days(NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(), rs.len());
        AlignedPair::new(
            ReturnSeries::new("c", dates.clone(), rs, 1).unwrap(),
            ReturnSeries::new("f", dates, rf, 1).unwrap(),
        )
        .unwrap()
    }

    fn normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn hedged_var(pair: &AlignedPair, beta: f64) -> f64 {
        let hp = HedgePath::constant(pair.dates(), beta, HedgeKind::Ols, 1).unwrap();
        stats::variance_sample(&hedged_portfolio(pair, &hp, Timing::InSample).unwrap().returns)
    }

    #[test]
    fn identical_legs_give_unit_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = normals(50, &mut rng);
        let p = pair_of(x.clone(), x);
        assert!((ols_ratio(&p).unwrap() - 1.0).abs() < 1e-14);
        let hedged = hedged_portfolio(&p, &naive_hedge(p.dates(), 1).unwrap(), Timing::InSample).unwrap();
        assert!(hedged.returns.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn independent_legs_give_zero_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = pair_of(normals(100_000, &mut rng), normals(100_000, &mut rng));
        assert!(ols_ratio(&p).unwrap().abs() < 0.01);
    }

    #[test]
    fn ratio_equals_regression_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = normals(500, &mut rng);
        let s: Vec<f64> = f.iter().zip(normals(500, &mut rng)).map(|(a, e)| 0.8 * a + 0.3 * e).collect();
        let p = pair_of(s.clone(), f.clone());
        let x = DMatrix::from_fn(500, 2, |i, j| if j == 0 { 1.0 } else { f[i] });
        let fit = ols(&s, &x).unwrap();
        assert!((fit.coefficients[1] - ols_ratio(&p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_futures() {
        let p = pair_of(vec![0.1, 0.2, 0.3, 0.1], vec![0.5; 4]);
        assert!(matches!(ols_hedge(&p), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn zero_ratio_leaves_cash() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = pair_of(normals(30, &mut rng), normals(30, &mut rng));
        let hp = HedgePath::constant(p.dates(), 0.0, HedgeKind::Ols, 1).unwrap();
        let h = hedged_portfolio(&p, &hp, Timing::OutOfSample).unwrap();
        assert_eq!(h.returns, p.cash().returns());
        assert_eq!(h.source, "ols-h1-out-of-sample");
    }

    #[test]
    fn naive_variance_and_ols_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = normals(400, &mut rng);
        let s: Vec<f64> = f.iter().zip(normals(400, &mut rng)).map(|(a, e)| a + 0.2 * e).collect();
        let p = pair_of(s.clone(), f.clone());
        let diff: Vec<f64> = s.iter().zip(&f).map(|(a, b)| a - b).collect();
        assert!((hedged_var(&p, 1.0) - stats::variance_sample(&diff)).abs() < 1e-15);
        // cash = futures + independent noise orthogonalised against futures
        let m = stats::mean(&f);
        let vf = stats::variance_sample(&f);
        let e: Vec<f64> = normals(400, &mut rng);
        let k = stats::covariance_sample(&e, &f) / vf;
        let s2: Vec<f64> = f.iter().zip(&e).map(|(a, n)| a + (n - k * (a - m))).collect();
        let p2 = pair_of(s2, f);
        assert!((ols_ratio(&p2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_dates_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = pair_of(normals(30, &mut rng), normals(30, &mut rng));
        let hp = naive_hedge(&p.dates()[1..], 1).unwrap();
        assert!(matches!(
            hedged_portfolio(&p, &hp, Timing::InSample),
            Err(Error::DateMismatch(_))
        ));
    }

    #[test]
    fn garch_path_properties() {
        let truth = VechGarchParams::ftse_like();
        let pair = simulate(&truth, 5000, 7).unwrap();
        let path = filter_vech(&pair, &truth).unwrap();
        let hp = garch_hedge(&path, 1).unwrap();
        let s = hp.summary();
        assert!(s.mean > 0.8 && s.mean < 1.0, "{s:?}");
        assert!(s.sd < 0.15);
        for t in 0..path.len() {
            assert!(hp.ratios()[t].abs() <= (path.hs[t] / path.hf[t]).sqrt());
        }
    }

    #[test]
    fn unit_path_when_cov_equals_var() {
        let dates = business_days(NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(), 4);
        let hf = vec![1e-4, 2e-4, 1.5e-4, 3e-4];
        let path = CovariancePath {
            dates,
            hs: vec![5e-4; 4],
            hf: hf.clone(),
            hsf: hf,
            eps_s: vec![0.0; 4],
            eps_f: vec![0.0; 4],
            clamped: Vec::new(),
        };
        let hp = garch_hedge(&path, 1).unwrap();
        assert!(hp.ratios().iter().all(|r| *r == 1.0));
    }

    #[test]
    fn long_run_mean_ratio() {
        let truth = VechGarchParams::ftse_like();
        let pair = simulate(&truth, 100_000, 9).unwrap();
        let hp = garch_hedge(&filter_vech(&pair, &truth).unwrap(), 1).unwrap();
        let target = truth.sf.unconditional() / truth.f.unconditional();
        assert!((hp.summary().mean - target).abs() < 0.02);
    }

    #[test]
    fn scaled_paths() {
        let truth = VechGarchParams::ftse_like();
        let pair = simulate(&truth, 2601, 10).unwrap();
        let base = garch_hedge(&filter_vech(&pair, &truth).unwrap(), 1).unwrap();

        let same = scaled_hedge(&base, base.dates(), 1).unwrap();
        assert_eq!(same.ratios(), base.ratios());
        assert_eq!(same.kind, HedgeKind::ScaledGarch);

        for h in [5, 20] {
            let target = pair.aggregate(h).unwrap();
            let scaled = scaled_hedge(&base, target.dates(), h).unwrap();
            assert_eq!(scaled.dates(), target.dates());
            assert!(scaled.ratios().iter().all(|r| base.ratios().contains(r)));
            assert!((scaled.summary().mean - base.summary().mean).abs() < 0.01);
            // the first period opens at the first retained base date
            let first = base.dates().iter().position(|d| *d == target.dates()[0]).unwrap();
            assert_eq!(scaled.ratios()[0], base.ratios()[first + 1 - h]);
        }

        let ols = ols_hedge(&pair).unwrap();
        let target = pair.aggregate(5).unwrap();
        let scaled = scaled_hedge(&ols, target.dates(), 5).unwrap();
        assert!(scaled.ratios().iter().all(|r| *r == ols.ratios()[0]));
    }

    #[test]
    fn scaled_needs_preceding_base_dates() {
        let dates = business_days(NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(), 10);
        let base = HedgePath::constant(&dates, 0.9, HedgeKind::Garch, 1).unwrap();
        assert!(matches!(
            scaled_hedge(&base, &[dates[2]], 5),
            Err(Error::NoPrecedingBaseDate(_))
        ));
        let naive = naive_hedge(&dates, 1).unwrap();
        assert!(matches!(scaled_hedge(&naive, &[dates[9]], 5), Err(Error::Config(_))));
    }

    #[test]
    fn forecast_path_matches_one_step_forecasts() {
        let truth = VechGarchParams::ftse_like();
        let pair = simulate(&truth, 700, 11).unwrap();
        let split = pair.dates()[499];
        let history = pair.between(pair.dates()[0], split);
        let holdout = pair.between(pair.dates()[500], *pair.dates().last().unwrap());
        let hp = forecast_hedge(&history, &holdout, &truth).unwrap();
        assert_eq!(hp.dates(), holdout.dates());
        let seed = CovSeed::from_pair(&history, &truth);
        for t in [0usize, 1, 57, 199] {
            let through = pair.between(pair.dates()[0], pair.dates()[499 + t]);
            let path = garch::filter_vech_seeded(&through, &truth, seed).unwrap();
            let fc = forecast_one_step(&path, &truth).unwrap();
            assert_eq!(hp.ratios()[t], fc.hedge_ratio(), "t={t}");
        }
    }

    #[test]
    fn rolling_with_one_block_matches_fixed() {
        let truth = VechGarchParams::ftse_like();
        let pair = simulate(&truth, 900, 12).unwrap();
        let history = pair.between(pair.dates()[0], pair.dates()[699]);
        let holdout = pair.between(pair.dates()[700], *pair.dates().last().unwrap());
        let opts = EstimateOptions::default();
        let fit = garch::estimate(&history, None, &opts).unwrap();
        let fixed = forecast_hedge(&history, &holdout, &fit.params).unwrap();
        let rolling = forecast_hedge_rolling(&history, &holdout, holdout.len(), &opts).unwrap();
        assert_eq!(fixed, rolling);
    }

    #[test]
    fn csv_rows() {
        let dates = business_days(NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(), 2);
        let hp = HedgePath::new(dates, vec![0.5, 0.75], HedgeKind::ScaledGarch, 5).unwrap();
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &[&hp]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "date,ratio,kind,horizon\n2001-01-01,0.5,scaled-garch,5\n2001-01-02,0.75,scaled-garch,5\n"
        );
    }

    proptest! {
        #[test]
        fn ols_is_argmin_over_constant_grid(seed in 0u64..1000, rho in -0.9f64..0.99) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = normals(300, &mut rng);
            let s: Vec<f64> = f
                .iter()
                .zip(normals(300, &mut rng))
                .map(|(a, e)| rho * a + (1.0 - rho * rho).sqrt() * e)
                .collect();
            let p = pair_of(s, f);
            let best = hedged_var(&p, ols_ratio(&p).unwrap());
            for k in 0..=400 {
                let beta = -2.0 + 0.01 * k as f64;
                prop_assert!(best <= hedged_var(&p, beta) * (1.0 + 1e-12));
            }
        }
    }
}
