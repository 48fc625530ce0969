//! Descriptive statistics and the return-series test battery: moments with
//! asymptotic significance, Jarque-Bera, Engle's ARCH LM test, KPSS and the
//! cash-futures correlation.
//!
//! Sample variances here use the Bessel (T - 1) divisor. Skewness and
//! kurtosis are standardized central moments with the T divisor.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::data::AlignedPair;
use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::stats;

/// Significance level used for the stored verdicts.
pub const DEFAULT_LEVEL: f64 = 0.05;

/// KPSS 1% critical value, level-stationarity null.
pub const KPSS_CV_CONSTANT_1PCT: f64 = 0.739;
/// KPSS 1% critical value, trend-stationarity null.
pub const KPSS_CV_TREND_1PCT: f64 = 0.216;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Reject,
    FailToReject,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Reject => "reject",
            Verdict::FailToReject => "fail-to-reject",
            Verdict::NotApplicable => "not-applicable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub critical_values: Vec<(String, f64)>,
    pub verdict: Verdict,
}

impl TestResult {
    fn from_p(statistic: f64, p: f64) -> Self {
        let mut r = Self {
            statistic,
            p_value: Some(p),
            critical_values: Vec::new(),
            verdict: Verdict::NotApplicable,
        };
        r.verdict = r.verdict_at(DEFAULT_LEVEL);
        r
    }

    fn not_applicable() -> Self {
        Self {
            statistic: f64::NAN,
            p_value: None,
            critical_values: Vec::new(),
            verdict: Verdict::NotApplicable,
        }
    }

    /// Verdict at another significance level (p-value tests only).
    pub fn verdict_at(&self, level: f64) -> Verdict {
        match self.p_value {
            Some(p) if p.is_finite() => {
                if p < level {
                    Verdict::Reject
                } else {
                    Verdict::FailToReject
                }
            }
            Some(_) => Verdict::NotApplicable,
            None => self.verdict,
        }
    }
}

/// Mean and SD in percent, skewness and excess kurtosis with p-values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub mean_pct: f64,
    pub sd_pct: f64,
    /// `None` when the series is constant.
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub p_skew: Option<f64>,
    pub p_kurt: Option<f64>,
}

impl MomentReport {
    pub fn skew_verdict(&self, level: f64) -> Verdict {
        p_verdict(self.p_skew, level)
    }

    pub fn kurt_verdict(&self, level: f64) -> Verdict {
        p_verdict(self.p_kurt, level)
    }
}

fn p_verdict(p: Option<f64>, level: f64) -> Verdict {
    match p {
        Some(p) if p < level => Verdict::Reject,
        Some(_) => Verdict::FailToReject,
        None => Verdict::NotApplicable,
    }
}

fn two_sided_normal_p(z: f64) -> f64 {
    let n = Normal::standard();
    (2.0 * (1.0 - n.cdf(z.abs()))).clamp(0.0, 1.0)
}

fn chi2_sf(x: f64, dof: f64) -> f64 {
    let c = ChiSquared::new(dof).expect("positive degrees of freedom");
    (1.0 - c.cdf(x)).clamp(0.0, 1.0)
}

fn require_len(r: &[f64], needed: usize) -> Result<()> {
    if r.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: r.len(),
        });
    }
    Ok(())
}

/// Skewness and excess kurtosis; `None` for a constant series.
fn shape(r: &[f64]) -> Option<(f64, f64)> {
    let (lo, hi) = stats::min_max(r);
    let (m2, m3, m4) = stats::central_moments(r);
    if lo == hi || !(m2 > 0.0) {
        return None;
    }
    Some((m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0))
}

pub fn moments(r: &[f64]) -> Result<MomentReport> {
    require_len(r, 4)?;
    let t = r.len() as f64;
    let (lo, hi) = stats::min_max(r);
    let sd = if lo == hi { 0.0 } else { stats::std_dev_sample(r) };
    let (skewness, excess_kurtosis, p_skew, p_kurt) = match shape(r) {
        Some((s, k)) => (
            Some(s),
            Some(k),
            Some(two_sided_normal_p(s / (6.0 / t).sqrt())),
            Some(two_sided_normal_p(k / (24.0 / t).sqrt())),
        ),
        None => (None, None, None, None),
    };
    Ok(MomentReport {
        n: r.len(),
        mean_pct: 100.0 * stats::mean(r),
        sd_pct: 100.0 * sd,
        skewness,
        excess_kurtosis,
        p_skew,
        p_kurt,
    })
}

/// Jarque-Bera statistic from sample size, skewness and excess kurtosis.
pub fn jarque_bera_from_moments(t: usize, skewness: f64, excess_kurtosis: f64) -> TestResult {
    let jb = t as f64 / 6.0 * (skewness * skewness + excess_kurtosis * excess_kurtosis / 4.0);
    TestResult::from_p(jb, chi2_sf(jb, 2.0))
}

pub fn jarque_bera(r: &[f64]) -> Result<TestResult> {
    require_len(r, 8)?;
    Ok(match shape(r) {
        Some((s, k)) => jarque_bera_from_moments(r.len(), s, k),
        None => TestResult::not_applicable(),
    })
}

/// Engle's LM test: squared demeaned returns regressed on a constant and
/// `lags` of themselves; statistic `(T - lags) * R^2` against chi-square.
pub fn engle_lm(r: &[f64], lags: usize) -> Result<TestResult> {
    if lags == 0 {
        return Err(Error::Config("engle_lm needs at least one lag".into()));
    }
    require_len(r, lags + 2)?;
    let m = stats::mean(r);
    let sq: Vec<f64> = r.iter().map(|v| (v - m) * (v - m)).collect();
    let n = sq.len() - lags;
    let y = &sq[lags..];
    let design = DMatrix::from_fn(n, lags + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            sq[lags + i - j]
        }
    });
    let fit = ols(y, &design)?;
    let stat = n as f64 * fit.r_squared;
    Ok(TestResult::from_p(stat, chi2_sf(stat, lags as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KpssVariant {
    Constant,
    Trend,
}

/// Newey-West automatic bandwidth `floor(4 (T/100)^(1/4))`.
pub fn kpss_default_lags(t: usize) -> usize {
    (4.0 * (t as f64 / 100.0).powf(0.25)).floor() as usize
}

pub fn kpss(r: &[f64], variant: KpssVariant) -> Result<TestResult> {
    kpss_with_lags(r, variant, kpss_default_lags(r.len()))
}

/// KPSS statistic `T^-2 sum S_t^2 / s^2(l)` with a Bartlett-kernel long-run
/// variance. The verdict compares against the 1% critical value.
pub fn kpss_with_lags(r: &[f64], variant: KpssVariant, lags: usize) -> Result<TestResult> {
    require_len(r, 20)?;
    let t = r.len();
    let resid: Vec<f64> = match variant {
        KpssVariant::Constant => {
            let m = stats::mean(r);
            r.iter().map(|v| v - m).collect()
        }
        KpssVariant::Trend => {
            let design =
                DMatrix::from_fn(t, 2, |i, j| if j == 0 { 1.0 } else { (i + 1) as f64 });
            match ols(r, &design) {
                Ok(fit) => fit.residuals,
                // constant input: residuals are identically zero
                Err(_) => vec![0.0; t],
            }
        }
    };
    let tf = t as f64;
    let mut lrv = resid.iter().map(|e| e * e).sum::<f64>() / tf;
    for s in 1..=lags.min(t - 1) {
        let w = 1.0 - s as f64 / (lags as f64 + 1.0);
        let gamma: f64 = resid[s..].iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>() / tf;
        lrv += 2.0 * w * gamma;
    }
    let cv = match variant {
        KpssVariant::Constant => KPSS_CV_CONSTANT_1PCT,
        KpssVariant::Trend => KPSS_CV_TREND_1PCT,
    };
    let critical_values = vec![("1%".to_string(), cv)];
    if !(lrv > 0.0) {
        return Ok(TestResult {
            critical_values,
            ..TestResult::not_applicable()
        });
    }
    let mut partial = 0.0;
    let mut sum_sq = 0.0;
    for e in &resid {
        partial += e;
        sum_sq += partial * partial;
    }
    let stat = sum_sq / (tf * tf * lrv);
    Ok(TestResult {
        statistic: stat,
        p_value: None,
        critical_values,
        verdict: if stat > cv {
            Verdict::Reject
        } else {
            Verdict::FailToReject
        },
    })
}

/// Pearson correlation of the two legs.
pub fn correlation(pair: &AlignedPair) -> Result<f64> {
    correlation_of(pair.cash().returns(), pair.futures().returns())
}

pub fn correlation_of(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DateMismatch("legs differ in length".into()));
    }
    require_len(x, 2)?;
    let (mx, my) = (stats::mean(x), stats::mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::DegenerateVariance(
            "correlation of a constant leg".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Moments and test statistics for one return series.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesDiagnostics {
    pub moments: MomentReport,
    pub jarque_bera: TestResult,
    pub lm: TestResult,
    pub kpss_constant: TestResult,
    pub kpss_trend: TestResult,
}

/// Number of lags in the LM test of the standard battery.
pub const LM_LAGS: usize = 4;

pub fn battery(r: &[f64]) -> Result<SeriesDiagnostics> {
    Ok(SeriesDiagnostics {
        moments: moments(r)?,
        jarque_bera: jarque_bera(r)?,
        lm: match engle_lm(r, LM_LAGS) {
            Ok(t) => t,
            Err(Error::SingularRegression(_)) => TestResult::not_applicable(),
            Err(e) => return Err(e),
        },
        kpss_constant: kpss(r, KpssVariant::Constant)?,
        kpss_trend: kpss(r, KpssVariant::Trend)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garch::{simulate_univariate, UniGarchParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn moments_constant_series_not_applicable() {
        let m = moments(&[0.01; 10]).unwrap();
        assert_eq!(m.sd_pct, 0.0);
        assert!(m.skewness.is_none());
        assert_eq!(m.skew_verdict(0.05), Verdict::NotApplicable);
        assert_eq!(m.kurt_verdict(0.05), Verdict::NotApplicable);
        assert!(matches!(moments(&[1.0, 2.0]), Err(Error::TooShort { .. })));
    }

    #[test]
    fn moments_two_point_symmetric() {
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 0.02 } else { -0.02 }).collect();
        let m = moments(&x).unwrap();
        assert!(m.skewness.unwrap().abs() < 1e-12);
        assert!((m.mean_pct).abs() < 1e-12);
    }

    #[test]
    fn moments_normal_kurtosis() {
        let m = moments(&normals(10_000, 11)).unwrap();
        assert!(m.excess_kurtosis.unwrap().abs() < 0.15, "{:?}", m.excess_kurtosis);
    }

    #[test]
    fn jarque_bera_examples() {
        let zero = jarque_bera_from_moments(100, 0.0, 0.0);
        assert_eq!(zero.statistic, 0.0);
        assert_eq!(zero.p_value, Some(1.0));

        // FTSE cash 1-day moments as printed; the published 916.94 used
        // unrounded moments.
        let ftse = jarque_bera_from_moments(2601, -0.166, 2.87);
        assert!((ftse.statistic - 904.6).abs() < 1.0, "{}", ftse.statistic);
        assert!((ftse.statistic / 916.94 - 1.0).abs() < 0.05);
        assert_eq!(ftse.verdict, Verdict::Reject);
    }

    #[test]
    fn jarque_bera_normal_size() {
        let fails = (0..500)
            .filter(|s| jarque_bera(&normals(5000, 1000 + s)).unwrap().verdict == Verdict::FailToReject)
            .count();
        assert!(fails >= 450, "{fails}");
    }

    #[test]
    fn engle_lm_iid_fails_to_reject() {
        let fails = (0..100)
            .filter(|s| engle_lm(&normals(2500, 2000 + s), 4).unwrap().verdict == Verdict::FailToReject)
            .count();
        assert!(fails >= 90, "{fails}");
    }

    #[test]
    fn engle_lm_detects_garch() {
        let p = UniGarchParams::new(1e-5, 0.28, 0.41, 0.0).unwrap();
        let rejects = (0..100)
            .filter(|s| {
                let y = simulate_univariate(&p, 2500, 3000 + s).unwrap();
                engle_lm(&y, 4).unwrap().verdict_at(0.01) == Verdict::Reject
            })
            .count();
        assert!(rejects >= 95, "{rejects}");
    }

    #[test]
    fn engle_lm_constant_is_singular() {
        assert!(matches!(
            engle_lm(&[0.5; 50], 4),
            Err(Error::SingularRegression(_))
        ));
    }

    #[test]
    fn kpss_white_noise_and_random_walk() {
        let stationary = (0..100)
            .filter(|s| kpss(&normals(2000, 4000 + s), KpssVariant::Constant).unwrap().statistic < 0.739)
            .count();
        assert!(stationary >= 98, "{stationary}");

        let nonstationary = (0..100)
            .filter(|s| {
                let walk: Vec<f64> = normals(2000, 5000 + s)
                    .iter()
                    .scan(0.0, |acc, e| {
                        *acc += e;
                        Some(*acc)
                    })
                    .collect();
                kpss(&walk, KpssVariant::Constant).unwrap().statistic > 0.739
            })
            .count();
        assert!(nonstationary >= 95, "{nonstationary}");
    }

    #[test]
    fn kpss_echoes_critical_values() {
        let x = normals(100, 1);
        let c = kpss(&x, KpssVariant::Constant).unwrap();
        let t = kpss(&x, KpssVariant::Trend).unwrap();
        assert_eq!(c.critical_values, vec![("1%".to_string(), 0.739)]);
        assert_eq!(t.critical_values, vec![("1%".to_string(), 0.216)]);
        assert_eq!(kpss_default_lags(100), 4);
        assert_eq!(kpss_default_lags(2601), 9);
    }

    #[test]
    fn correlation_examples() {
        let x = normals(500, 9);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((correlation_of(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((correlation_of(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            correlation_of(&x, &vec![1.0; 500]),
            Err(Error::DegenerateVariance(_))
        ));

        let rho: f64 = 0.97;
        let z1 = normals(2500, 21);
        let z2 = normals(2500, 22);
        let y: Vec<f64> = z1
            .iter()
            .zip(&z2)
            .map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b)
            .collect();
        let est = correlation_of(&z1, &y).unwrap();
        assert!((est - rho).abs() < 0.01, "{est}");
    }

    #[test]
    fn invariances() {
        let x: Vec<f64> = normals(400, 31).iter().map(|v| v * v * v).collect();
        let affine: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
        let shifted: Vec<f64> = x.iter().map(|v| v + 0.25).collect();
        let flipped: Vec<f64> = x.iter().map(|v| -v).collect();

        let jb = jarque_bera(&x).unwrap().statistic;
        assert!((jarque_bera(&affine).unwrap().statistic / jb - 1.0).abs() < 1e-9);

        let lm = engle_lm(&x, 4).unwrap().statistic;
        assert!((engle_lm(&shifted, 4).unwrap().statistic / lm - 1.0).abs() < 1e-9);

        for v in [KpssVariant::Constant, KpssVariant::Trend] {
            let k = kpss(&x, v).unwrap().statistic;
            assert!((kpss(&flipped, v).unwrap().statistic / k - 1.0).abs() < 1e-12);
        }

        let y = normals(400, 32);
        assert_eq!(correlation_of(&x, &y).unwrap(), correlation_of(&y, &x).unwrap());
    }
}
