//! Synthetic price data in the ingest format.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{business_days, write_prices, PriceSeries, Role};
use crate::error::{Error, Result};
use crate::garch::{simulate_returns, VechGarchParams};

pub const START_PRICE: f64 = 100.0;

/// First price date of generated fixtures.
pub fn fixture_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(1993, 3, 26).expect("valid date")
}

/// Integrates log returns into prices starting at [`START_PRICE`]; the
/// result has one more row than `returns`.
pub fn prices_from_returns(
    label: &str,
    role: Role,
    dates: &[NaiveDate],
    returns: &[f64],
) -> Result<PriceSeries> {
    if dates.len() != returns.len() + 1 {
        return Err(Error::DateMismatch(format!(
            "{} price dates for {} returns",
            dates.len(),
            returns.len()
        )));
    }
    let mut level = START_PRICE.ln();
    let mut rows = Vec::with_capacity(dates.len());
    rows.push((dates[0], START_PRICE));
    for (d, r) in dates[1..].iter().zip(returns) {
        level += r;
        rows.push((*d, level.exp()));
    }
    PriceSeries::new(label, role, rows)
}

/// Paths of a written cash/futures fixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureFiles {
    pub cash: PathBuf,
    pub futures: PathBuf,
}

fn write_pair(out_dir: &Path, label: &str, cash: &PriceSeries, fut: &PriceSeries) -> Result<FixtureFiles> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = FixtureFiles {
        cash: out_dir.join(format!("{label}_cash.csv")),
        futures: out_dir.join(format!("{label}_futures.csv")),
    };
    write_prices(&files.cash, cash)?;
    write_prices(&files.futures, fut)?;
    Ok(files)
}

/// Simulates `t` returns of the diagonal VECH model and writes
/// `{label}_cash.csv` and `{label}_futures.csv` with `t + 1` price rows each.
pub fn simulate_fixture(
    params: &VechGarchParams,
    t: usize,
    seed: u64,
    out_dir: &Path,
    label: &str,
) -> Result<FixtureFiles> {
    let (cash, fut) = simulated_prices(params, t, seed, label)?;
    write_pair(out_dir, label, &cash, &fut)
}

/// The price series written by [`simulate_fixture`].
pub fn simulated_prices(
    params: &VechGarchParams,
    t: usize,
    seed: u64,
    label: &str,
) -> Result<(PriceSeries, PriceSeries)> {
    if t == 0 {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let (rs, rf) = simulate_returns(params, t, seed)?;
    let dates = business_days(fixture_start(), t + 1);
    Ok((
        prices_from_returns(label, Role::Cash, &dates, &rs)?,
        prices_from_returns(label, Role::Futures, &dates, &rf)?,
    ))
}

/// Log prices sharing one random-walk component, each leg with its own
/// stationary AR(1) deviation.
///
/// The transitory noise dominates short-horizon returns and washes out over
/// long ones, so the cash/futures correlation rises with the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CointegratedSpec {
    /// Daily SD of the common permanent innovation.
    pub sd_permanent: f64,
    /// Stationary SD of each leg's transitory deviation.
    pub sd_transitory_cash: f64,
    pub sd_transitory_futures: f64,
    /// AR(1) coefficient of the transitory deviations.
    pub ar: f64,
    pub drift: f64,
}

impl Default for CointegratedSpec {
    fn default() -> Self {
        Self {
            sd_permanent: 0.011,
            sd_transitory_cash: 0.003,
            sd_transitory_futures: 0.004,
            ar: 0.3,
            drift: 0.0001,
        }
    }
}

impl CointegratedSpec {
    fn validate(&self) -> Result<()> {
        let sds = [self.sd_permanent, self.sd_transitory_cash, self.sd_transitory_futures];
        if sds.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) || !(self.sd_permanent > 0.0) {
            return Err(Error::InvalidParams("fixture SDs must be finite, permanent SD > 0".into()));
        }
        if !(self.ar.abs() < 1.0) || !self.drift.is_finite() {
            return Err(Error::InvalidParams(format!("AR coefficient {} must be in (-1, 1)", self.ar)));
        }
        Ok(())
    }
}

/// `t + 1` prices per leg of a cointegrated pair.
pub fn cointegrated_prices(
    spec: &CointegratedSpec,
    t: usize,
    seed: u64,
    label: &str,
) -> Result<(PriceSeries, PriceSeries)> {
    spec.validate()?;
    if t == 0 {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let innov = (1.0 - spec.ar * spec.ar).sqrt();
    let mut draw = || std.sample(&mut rng);
    let mut m = 0.0;
    let mut uc = spec.sd_transitory_cash * draw();
    let mut uf = spec.sd_transitory_futures * draw();
    let (mut lc, mut lf) = (Vec::with_capacity(t + 1), Vec::with_capacity(t + 1));
    lc.push(m + uc);
    lf.push(m + uf);
    for _ in 0..t {
        m += spec.drift + spec.sd_permanent * draw();
        uc = spec.ar * uc + spec.sd_transitory_cash * innov * draw();
        uf = spec.ar * uf + spec.sd_transitory_futures * innov * draw();
        lc.push(m + uc);
        lf.push(m + uf);
    }
    let dates = business_days(fixture_start(), t + 1);
    let build = |role, logs: &[f64]| {
        let rows = dates
            .iter()
            .zip(logs)
            .map(|(d, l)| (*d, START_PRICE * (l - logs[0]).exp()))
            .collect();
        PriceSeries::new(label, role, rows)
    };
    Ok((build(Role::Cash, &lc)?, build(Role::Futures, &lf)?))
}

/// Writes a cointegrated pair in the ingest format.
pub fn cointegrated_fixture(
    spec: &CointegratedSpec,
    t: usize,
    seed: u64,
    out_dir: &Path,
    label: &str,
) -> Result<FixtureFiles> {
    let (cash, fut) = cointegrated_prices(spec, t, seed, label)?;
    write_pair(out_dir, label, &cash, &fut)
}
