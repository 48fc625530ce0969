//! Risk measures, hedging effectiveness and bootstrap tests of effectiveness
//! differences.
//!
//! Losses are `L = -r`. VaR at tail level `alpha` is the empirical order
//! statistic of the losses exceeded with probability `alpha` (the 99th
//! percentile for `alpha = 0.01`), without interpolation; CVaR is the mean of
//! all losses at or above it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats;

pub const DEFAULT_TAIL_ALPHA: f64 = 0.01;
pub const DEFAULT_RESAMPLES: usize = 2000;
/// Two-sided 5% critical value of the standard normal.
pub const Z_CRIT_5PCT: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskMeasures {
    pub variance: f64,
    /// VaR in loss units.
    pub var_q: f64,
    /// CVaR in loss units.
    pub cvar: f64,
    pub alpha_level: f64,
    pub n: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Config(format!("tail alpha {alpha} must be in (0, 0.5)")));
    }
    Ok(())
}

/// Number of observations in the `alpha` tail of `n`.
fn tail_count(n: usize, alpha: f64) -> usize {
    (alpha * n as f64 + 1e-9).floor() as usize
}

/// `(VaR, CVaR)` from ascending losses with `k >= 1` tail observations.
fn tail_from_sorted(sorted: &[f64], k: usize) -> (f64, f64) {
    let var_q = sorted[sorted.len() - k];
    let first = sorted.partition_point(|l| *l < var_q);
    let tail = &sorted[first..];
    (var_q, tail.iter().sum::<f64>() / tail.len() as f64)
}

fn sorted_losses(returns: &[f64]) -> Vec<f64> {
    let mut losses: Vec<f64> = returns.iter().map(|r| -r).collect();
    losses.sort_by(f64::total_cmp);
    losses
}

/// Sample variance, VaR and CVaR at tail level `alpha`.
pub fn risk_measures(returns: &[f64], alpha: f64) -> Result<RiskMeasures> {
    check_alpha(alpha)?;
    let n = returns.len();
    let needed = (1.0 / alpha - 1e-9).ceil() as usize;
    if n < needed.max(2) {
        return Err(Error::TooShortForTail {
            needed: needed.max(2),
            got: n,
        });
    }
    let (var_q, cvar) = tail_from_sorted(&sorted_losses(returns), tail_count(n, alpha));
    Ok(RiskMeasures {
        variance: stats::variance_sample(returns),
        var_q,
        cvar,
        alpha_level: alpha,
        n,
    })
}

/// Risk measures of a short block: the tail holds at least the worst loss.
fn block_risk(returns: &[f64], alpha: f64) -> RiskMeasures {
    let k = tail_count(returns.len(), alpha).max(1);
    let (var_q, cvar) = tail_from_sorted(&sorted_losses(returns), k);
    RiskMeasures {
        variance: stats::variance_sample(returns),
        var_q,
        cvar,
        alpha_level: alpha,
        n: returns.len(),
    }
}

/// Normal-distribution VaR and CVaR from the sample mean and standard
/// deviation, for comparison with the empirical measures.
pub fn normal_risk_measures(returns: &[f64], alpha: f64) -> Result<RiskMeasures> {
    check_alpha(alpha)?;
    if returns.len() < 2 {
        return Err(Error::TooShortForTail {
            needed: 2,
            got: returns.len(),
        });
    }
    let mu = stats::mean(returns);
    let variance = stats::variance_sample(returns);
    let sd = variance.sqrt();
    let std = Normal::standard();
    let z = std.inverse_cdf(1.0 - alpha);
    Ok(RiskMeasures {
        variance,
        var_q: -mu + sd * z,
        cvar: -mu + sd * std.pdf(z) / alpha,
        alpha_level: alpha,
        n: returns.len(),
    })
}

/// Percentage risk reductions `1 - hedged / unhedged`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Effectiveness {
    pub variance: f64,
    pub var: f64,
    pub cvar: f64,
}

pub fn effectiveness(hedged: &RiskMeasures, unhedged: &RiskMeasures) -> Result<Effectiveness> {
    for (name, v) in [
        ("variance", unhedged.variance),
        ("VaR", unhedged.var_q),
        ("CVaR", unhedged.cvar),
    ] {
        if !(v > 0.0) {
            return Err(Error::ZeroBaselineRisk(format!("unhedged {name} is {v}")));
        }
    }
    Ok(Effectiveness {
        variance: 1.0 - hedged.variance / unhedged.variance,
        var: 1.0 - hedged.var_q / unhedged.var_q,
        cvar: 1.0 - hedged.cvar / unhedged.cvar,
    })
}

/// Effectiveness per non-overlapping block. Blocks whose unhedged risk is not
/// positive have no defined reduction and hold NaN for that measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockEffectiveness {
    pub block_len: usize,
    pub variance: Vec<f64>,
    pub var: Vec<f64>,
    pub cvar: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Measure {
    Variance,
    Var,
    Cvar,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Variance, Measure::Var, Measure::Cvar];

    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::Variance => "variance",
            Measure::Var => "var",
            Measure::Cvar => "cvar",
        }
    }
}

impl BlockEffectiveness {
    pub fn len(&self) -> usize {
        self.variance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variance.is_empty()
    }

    pub fn series(&self, m: Measure) -> &[f64] {
        match m {
            Measure::Variance => &self.variance,
            Measure::Var => &self.var,
            Measure::Cvar => &self.cvar,
        }
    }

    /// Mean over blocks with a defined reduction.
    pub fn mean(&self, m: Measure) -> f64 {
        let v: Vec<f64> = self.series(m).iter().copied().filter(|x| x.is_finite()).collect();
        stats::mean(&v)
    }
}

/// Splits both series into consecutive blocks of `block_len` (a trailing
/// partial block is dropped) and computes the reduction in each.
pub fn block_effectiveness(
    hedged: &[f64],
    unhedged: &[f64],
    block_len: usize,
    alpha: f64,
) -> Result<BlockEffectiveness> {
    check_alpha(alpha)?;
    if hedged.len() != unhedged.len() {
        return Err(Error::DateMismatch(format!(
            "{} hedged vs {} unhedged returns",
            hedged.len(),
            unhedged.len()
        )));
    }
    if block_len < 2 {
        return Err(Error::Config("block length must be >= 2".into()));
    }
    let blocks = hedged.len() / block_len;
    if blocks < 2 {
        return Err(Error::TooFewBlocks {
            needed: 2,
            got: blocks,
        });
    }
    let ratio = |h: f64, u: f64| if u > 0.0 { 1.0 - h / u } else { f64::NAN };
    let mut out = BlockEffectiveness {
        block_len,
        variance: Vec::with_capacity(blocks),
        var: Vec::with_capacity(blocks),
        cvar: Vec::with_capacity(blocks),
    };
    for (h, u) in hedged.chunks_exact(block_len).zip(unhedged.chunks_exact(block_len)) {
        let (rh, ru) = (block_risk(h, alpha), block_risk(u, alpha));
        out.variance.push(ratio(rh.variance, ru.variance));
        out.var.push(ratio(rh.var_q, ru.var_q));
        out.cvar.push(ratio(rh.cvar, ru.cvar));
    }
    Ok(out)
}

/// Drops pairs where either series is undefined.
pub fn paired_finite(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    a.iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffTest {
    pub mean_diff: f64,
    pub t_stat: f64,
    pub bootstrap_se: f64,
    pub n_resamples: usize,
    pub significant_5pct: bool,
}

/// Paired bootstrap t-test of `mean(a) - mean(b)`.
///
/// Each resample draws block indices with replacement and applies them to
/// both series; the standard error is the standard deviation of the resampled
/// mean differences. Resample `i` uses its own stream of a ChaCha generator
/// keyed by `seed`, so results do not depend on the thread count.
pub fn bootstrap_diff_test(a: &[f64], b: &[f64], n_resamples: usize, seed: u64) -> Result<DiffTest> {
    if a.len() != b.len() {
        return Err(Error::DateMismatch(format!(
            "paired series differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 5 {
        return Err(Error::TooFewBlocks {
            needed: 5,
            got: a.len(),
        });
    }
    if n_resamples < 2 {
        return Err(Error::Config("need at least two bootstrap resamples".into()));
    }
    if let Some(v) = a.iter().chain(b).find(|v| !v.is_finite()) {
        return Err(Error::InvalidParams(format!("non-finite effectiveness value {v}")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let mean_diff = stats::mean(&d);
    let means: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut sum = 0.0;
            for _ in 0..n {
                sum += d[rng.random_range(0..n)];
            }
            sum / n as f64
        })
        .collect();
    let se = stats::std_dev_sample(&means);
    let t_stat = if se > 0.0 {
        mean_diff / se
    } else if mean_diff == 0.0 {
        0.0
    } else {
        mean_diff.signum() * f64::INFINITY
    };
    Ok(DiffTest {
        mean_diff,
        t_stat,
        bootstrap_se: se,
        n_resamples,
        significant_5pct: t_stat.abs() > Z_CRIT_5PCT,
    })
}
