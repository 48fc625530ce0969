//! Horizon scaling: the square-root-of-time rule, the empirical power law
//! `{E|r|^p}^(1/p) = c * dt^D`, and weak-GARCH(1,1) temporal aggregation of
//! GARCH parameters.

use serde::{Deserialize, Serialize};

use crate::data;
use crate::error::{Error, Result};
use crate::garch::{GarchTriple, VechGarchParams};
use crate::stats;

/// `sd * sqrt(h)`.
pub fn sqrt_scale_sd(sd: f64, h: usize) -> f64 {
    sd * (h as f64).sqrt()
}

/// `v * h`; applies to variances and covariances alike.
pub fn scale_variance_cov(v: f64, h: usize) -> f64 {
    v * h as f64
}

/// Power law for the `p`-th absolute moment across horizons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub c: f64,
    /// Drift exponent; 0.5 is the square-root rule.
    pub d: f64,
    pub p: f64,
}

impl ScalingLaw {
    pub fn new(c: f64, d: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(p > 0.0 && p.is_finite()) || !d.is_finite() {
            return Err(Error::InvalidParams(format!(
                "scaling law needs c > 0, p > 0 and finite D (c={c}, D={d}, p={p})"
            )));
        }
        Ok(Self { c, d, p })
    }

    /// Square-root law anchored at `sd_base`.
    pub fn sqrt(sd_base: f64) -> Result<Self> {
        Self::new(sd_base, 0.5, 2.0)
    }
}

/// Volatility at `dt_ratio` base periods: `sd_base * dt_ratio^D`, so that a
/// ratio of 1 returns `sd_base`. `D = 0.5` uses `sqrt` and agrees exactly with
/// [`sqrt_scale_sd`].
pub fn scaling_law(sd_base: f64, dt_ratio: f64, law: &ScalingLaw) -> f64 {
    if law.d == 0.5 {
        sd_base * dt_ratio.sqrt()
    } else {
        sd_base * dt_ratio.powf(law.d)
    }
}

/// Fits `c` and `D` by regressing `ln {mean |r_h|^p}^(1/p)` on `ln h` over
/// aggregated horizons of the base `returns`.
pub fn fit_scaling_law(returns: &[f64], horizons: &[usize], p: f64) -> Result<ScalingLaw> {
    let mut hs: Vec<usize> = horizons.to_vec();
    hs.sort_unstable();
    hs.dedup();
    if hs.len() < 2 || hs[0] == 0 {
        return Err(Error::Config("need at least two distinct positive horizons".into()));
    }
    let mut xs = Vec::with_capacity(hs.len());
    let mut ys = Vec::with_capacity(hs.len());
    for &h in &hs {
        let agg = data::aggregate_slice(returns, h);
        if agg.len() < 2 {
            return Err(Error::TooShort {
                needed: 2 * h,
                got: returns.len(),
            });
        }
        let m = agg.iter().map(|r| r.abs().powf(p)).sum::<f64>() / agg.len() as f64;
        if !(m > 0.0) {
            return Err(Error::DegenerateVariance("zero absolute moment".into()));
        }
        xs.push((h as f64).ln());
        ys.push(m.powf(1.0 / p).ln());
    }
    let (mx, my) = (stats::mean(&xs), stats::mean(&ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let d = sxy / sxx;
    ScalingLaw::new((my - d * mx).exp(), d, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DnInput {
    pub params: GarchTriple,
    /// Raw kurtosis of the base-frequency returns (3 for a normal).
    pub kappa: f64,
    pub h: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DnOutput {
    pub omega_h: f64,
    pub alpha_h: f64,
    pub beta_h: f64,
}

impl DnOutput {
    pub fn persistence(&self) -> f64 {
        self.alpha_h + self.beta_h
    }

    pub fn to_triple(&self) -> GarchTriple {
        GarchTriple::new(self.omega_h, self.alpha_h, self.beta_h)
    }
}

/// Weak-GARCH(1,1) aggregation of one recursion to `h` base periods.
///
/// `beta_h` is the root of `r * b^2 - b + r = 0` with `|b| < 1`, where `r`
/// depends on the persistence, `h` and `kappa`; `alpha_h` completes the
/// persistence `(alpha + beta)^h`. `h = 1` returns the input unchanged.
pub fn dn_aggregate(input: &DnInput) -> Result<DnOutput> {
    let DnInput { params, kappa, h } = *input;
    let GarchTriple { omega, alpha, beta } = params;
    if h == 0 {
        return Err(Error::InvalidParams("aggregation horizon must be >= 1".into()));
    }
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(Error::InvalidKappa(kappa));
    }
    let p = alpha + beta;
    if !(p < 1.0) || !omega.is_finite() || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::InvalidParams(format!(
            "aggregation needs alpha + beta < 1 (got {p})"
        )));
    }
    if h == 1 {
        return Ok(DnOutput {
            omega_h: omega,
            alpha_h: alpha,
            beta_h: beta,
        });
    }

    let hf = h as f64;
    let ph = p.powi(h as i32);
    let p2h = ph * ph;
    let one_m_p2 = 1.0 - p * p;
    let lever = alpha - beta * alpha * p;
    let a = hf * (1.0 - beta).powi(2)
        + 2.0 * hf * (hf - 1.0) * (1.0 - p).powi(2) * (1.0 - beta * beta - 2.0 * beta * alpha)
            / ((kappa - 1.0) * one_m_p2)
        + 4.0 * (hf - 1.0 - hf * p + ph) * lever / one_m_p2;
    let b = lever * (1.0 - p2h) / one_m_p2;
    let r = (a * ph - b) / (a * (1.0 + p2h) - 2.0 * b);
    if !r.is_finite() || r.abs() > 0.5 {
        return Err(Error::NoRealRoot {
            r,
            a,
            b,
            persistence_h: ph,
        });
    }
    let beta_h = if r == 0.0 {
        0.0
    } else {
        (1.0 - (1.0 - 4.0 * r * r).sqrt()) / (2.0 * r)
    };
    Ok(DnOutput {
        omega_h: hf * omega * (1.0 - ph) / (1.0 - p),
        alpha_h: ph - beta_h,
        beta_h,
    })
}

/// Aggregates each recursion of a diagonal VECH model. The covariance
/// equation uses the mean of the two legs' kurtoses; means scale by `h`.
pub fn dn_aggregate_vech(p: &VechGarchParams, kappa_s: f64, kappa_f: f64, h: usize) -> Result<VechGarchParams> {
    let one = |params: GarchTriple, kappa: f64| dn_aggregate(&DnInput { params, kappa, h }).map(|o| o.to_triple());
    Ok(VechGarchParams {
        s: one(p.s, kappa_s)?,
        sf: one(p.sf, 0.5 * (kappa_s + kappa_f))?,
        f: one(p.f, kappa_f)?,
        mu_s: p.mu_s * h as f64,
        mu_f: p.mu_f * h as f64,
    })
}

/// Raw sample kurtosis `m4 / m2^2` of `r`, the `kappa` used for aggregation.
pub fn sample_kappa(r: &[f64]) -> Result<f64> {
    let k = stats::kurtosis(r);
    if !k.is_finite() {
        return Err(Error::DegenerateVariance("kurtosis of a constant series".into()));
    }
    Ok(k)
}
