//! Bivariate diagonal VECH GARCH(1,1): filtering with a positive-definiteness
//! guard, Gaussian likelihood with analytic scores, forecasting and
//! simulation.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::params::VechGarchParams;
use super::BURN_IN;
use crate::data::{business_days, AlignedPair, ReturnSeries};
use crate::error::{Error, Result};
use crate::stats;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Covariances are clamped to this fraction of `sqrt(H_s * H_f)`.
pub const PD_SHRINK: f64 = 1.0 - 1e-8;

/// Default weight of the squared-excess penalty for clamped steps.
pub const DEFAULT_PENALTY_WEIGHT: f64 = 1e4;

/// Initial conditional (co)variances of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovSeed {
    pub hs: f64,
    pub hf: f64,
    pub hsf: f64,
}

impl CovSeed {
    /// Maximum-likelihood (1/T) sample moments of the residuals `r - mu`.
    pub fn from_sample(cash: &[f64], fut: &[f64], mu_s: f64, mu_f: f64) -> Self {
        let n = cash.len().max(1) as f64;
        let (mut hs, mut hf, mut hsf) = (0.0, 0.0, 0.0);
        for (a, b) in cash.iter().zip(fut) {
            let (es, ef) = (a - mu_s, b - mu_f);
            hs += es * es;
            hf += ef * ef;
            hsf += es * ef;
        }
        Self {
            hs: hs / n,
            hf: hf / n,
            hsf: hsf / n,
        }
    }

    pub fn from_pair(pair: &AlignedPair, p: &VechGarchParams) -> Self {
        Self::from_sample(pair.cash().returns(), pair.futures().returns(), p.mu_s, p.mu_f)
    }

    /// Unconditional values `omega / (1 - alpha - beta)` per equation.
    pub fn unconditional(p: &VechGarchParams) -> Self {
        Self {
            hs: p.s.unconditional(),
            hf: p.f.unconditional(),
            hsf: p.sf.unconditional(),
        }
    }
}

/// Conditional (co)variances and residuals for each observation.
///
/// `hs[t]`, `hf[t]`, `hsf[t]` are formed from information up to `t - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovariancePath {
    pub dates: Vec<NaiveDate>,
    pub hs: Vec<f64>,
    pub hf: Vec<f64>,
    pub hsf: Vec<f64>,
    pub eps_s: Vec<f64>,
    pub eps_f: Vec<f64>,
    /// Indices where the covariance was clamped.
    pub clamped: Vec<usize>,
}

impl CovariancePath {
    pub fn len(&self) -> usize {
        self.hs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hs.is_empty()
    }

    pub fn correlation(&self, t: usize) -> f64 {
        self.hsf[t] / (self.hs[t] * self.hf[t]).sqrt()
    }

    /// The last `n` observations.
    pub fn tail(&self, n: usize) -> Self {
        let lo = self.len().saturating_sub(n);
        Self {
            dates: self.dates[lo..].to_vec(),
            hs: self.hs[lo..].to_vec(),
            hf: self.hf[lo..].to_vec(),
            hsf: self.hsf[lo..].to_vec(),
            eps_s: self.eps_s[lo..].to_vec(),
            eps_f: self.eps_f[lo..].to_vec(),
            clamped: self.clamped.iter().filter(|&&i| i >= lo).map(|i| i - lo).collect(),
        }
    }
}

/// One-step (or k-step) covariance forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovForecast {
    pub hs: f64,
    pub hf: f64,
    pub hsf: f64,
}

impl CovForecast {
    pub fn hedge_ratio(&self) -> f64 {
        self.hsf / self.hf
    }
}

/// Clamps `raw` into the PD region; returns the guarded value and whether
/// clamping happened.
#[inline]
pub fn pd_guard(hs: f64, hf: f64, raw: f64) -> (f64, bool) {
    let lim = PD_SHRINK * (hs * hf).sqrt();
    if raw.abs() > lim {
        (raw.signum() * lim, true)
    } else {
        (raw, false)
    }
}

pub fn filter_vech(pair: &AlignedPair, p: &VechGarchParams) -> Result<CovariancePath> {
    filter_vech_seeded(pair, p, CovSeed::from_pair(pair, p))
}

/// Runs the three recursions in lockstep from `seed`.
pub fn filter_vech_seeded(
    pair: &AlignedPair,
    p: &VechGarchParams,
    seed: CovSeed,
) -> Result<CovariancePath> {
    p.validate()?;
    let rs = pair.cash().returns();
    let rf = pair.futures().returns();
    let n = rs.len();
    let mut path = CovariancePath {
        dates: pair.dates().to_vec(),
        hs: Vec::with_capacity(n),
        hf: Vec::with_capacity(n),
        hsf: Vec::with_capacity(n),
        eps_s: rs.iter().map(|r| r - p.mu_s).collect(),
        eps_f: rf.iter().map(|r| r - p.mu_f).collect(),
        clamped: Vec::new(),
    };
    let (mut hs, mut hf) = (seed.hs, seed.hf);
    let (mut hsf, c0) = pd_guard(hs, hf, seed.hsf);
    if c0 {
        path.clamped.push(0);
    }
    for t in 0..n {
        if t > 0 {
            let (es, ef) = (path.eps_s[t - 1], path.eps_f[t - 1]);
            hs = p.s.step(es * es, hs);
            hf = p.f.step(ef * ef, hf);
            let (v, c) = pd_guard(hs, hf, p.sf.step(es * ef, hsf));
            hsf = v;
            if c {
                path.clamped.push(t);
            }
        }
        path.hs.push(hs);
        path.hf.push(hf);
        path.hsf.push(hsf);
    }
    Ok(path)
}

/// Gaussian log-likelihood on the guarded path, seeded at sample moments.
pub fn loglik(pair: &AlignedPair, p: &VechGarchParams) -> Result<f64> {
    p.validate()?;
    let seed = CovSeed::from_pair(pair, p);
    Ok(evaluate(pair.cash().returns(), pair.futures().returns(), p, seed, EvalMode::default()).loglik)
}

/// Log-likelihood without the PD guard; fails with `NonPdMatrix` at the first
/// step whose covariance matrix is not positive definite.
pub fn loglik_unguarded(pair: &AlignedPair, p: &VechGarchParams, seed: CovSeed) -> Result<f64> {
    p.validate()?;
    let rs = pair.cash().returns();
    let rf = pair.futures().returns();
    let (mut hs, mut hf, mut hsf) = (seed.hs, seed.hf, seed.hsf);
    let mut ll = 0.0;
    for t in 0..rs.len() {
        if t > 0 {
            let (es, ef) = (rs[t - 1] - p.mu_s, rf[t - 1] - p.mu_f);
            hs = p.s.step(es * es, hs);
            hf = p.f.step(ef * ef, hf);
            hsf = p.sf.step(es * ef, hsf);
        }
        let det = hs * hf - hsf * hsf;
        if !(det > 0.0 && hs > 0.0) {
            return Err(Error::NonPdMatrix(t));
        }
        ll += density(hs, hf, hsf, rs[t] - p.mu_s, rf[t] - p.mu_f);
    }
    Ok(ll)
}

#[inline]
fn density(a: f64, c: f64, b: f64, e1: f64, e2: f64) -> f64 {
    let det = a * c - b * b;
    let q = c * e1 * e1 - 2.0 * b * e1 * e2 + a * e2 * e2;
    -LN_2PI - 0.5 * det.ln() - 0.5 * q / det
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EvalMode {
    pub gradient: bool,
    pub scores: bool,
    pub penalty_weight: f64,
}

impl Default for EvalMode {
    fn default() -> Self {
        Self {
            gradient: false,
            scores: false,
            penalty_weight: DEFAULT_PENALTY_WEIGHT,
        }
    }
}

pub(crate) struct VechEvaluation {
    pub loglik: f64,
    pub penalty: f64,
    /// Gradient of `loglik` in natural-parameter order.
    pub grad_loglik: [f64; 11],
    pub grad_penalty: [f64; 11],
    pub scores: Option<Vec<[f64; 11]>>,
}

type Grad = [f64; 11];

#[inline]
fn scaled(v: &Grad, k: f64) -> Grad {
    let mut out = [0.0; 11];
    for i in 0..11 {
        out[i] = v[i] * k;
    }
    out
}

/// Likelihood, clamp penalty and (optionally) analytic derivatives.
///
/// Derivatives follow the recursions: `dH_t = e + beta * dH_{t-1} + alpha *
/// d(shock)`, with the clamped covariance differentiated through
/// `+-c * sqrt(H_s H_f)`. The seed is held fixed.
pub(crate) fn evaluate(
    rs: &[f64],
    rf: &[f64],
    p: &VechGarchParams,
    seed: CovSeed,
    mode: EvalMode,
) -> VechEvaluation {
    let n = rs.len();
    let track = mode.gradient || mode.scores;
    let mut loglik = 0.0;
    let mut penalty = 0.0;
    let mut grad = [0.0; 11];
    let mut grad_pen = [0.0; 11];
    let mut scores = mode.scores.then(|| Vec::with_capacity(n));

    let (mut hs, mut hf) = (seed.hs, seed.hf);
    let (mut hsf, _) = pd_guard(hs, hf, seed.hsf);
    let mut dhs = [0.0; 11];
    let mut dhf = [0.0; 11];
    let mut dhsf = [0.0; 11];

    for t in 0..n {
        if t > 0 {
            let (es, ef) = (rs[t - 1] - p.mu_s, rf[t - 1] - p.mu_f);
            let (xs, xf, xsf) = (es * es, ef * ef, es * ef);
            let new_hs = p.s.step(xs, hs);
            let new_hf = p.f.step(xf, hf);
            let raw = p.sf.step(xsf, hsf);
            let mut draw = [0.0; 11];
            if track {
                let mut a = scaled(&dhs, p.s.beta);
                a[0] += 1.0;
                a[1] += xs;
                a[2] += hs;
                a[9] += p.s.alpha * (-2.0 * es);
                let mut c = scaled(&dhf, p.f.beta);
                c[6] += 1.0;
                c[7] += xf;
                c[8] += hf;
                c[10] += p.f.alpha * (-2.0 * ef);
                draw = scaled(&dhsf, p.sf.beta);
                draw[3] += 1.0;
                draw[4] += xsf;
                draw[5] += hsf;
                draw[9] += p.sf.alpha * (-ef);
                draw[10] += p.sf.alpha * (-es);
                dhs = a;
                dhf = c;
            }
            hs = new_hs;
            hf = new_hf;
            let bound = (hs * hf).sqrt();
            let lim = PD_SHRINK * bound;
            if raw.abs() > lim {
                let sign = raw.signum();
                hsf = sign * lim;
                let q = raw.abs() / bound - PD_SHRINK;
                penalty += mode.penalty_weight * q * q;
                if track {
                    let mut dbound = [0.0; 11];
                    for i in 0..11 {
                        dbound[i] = (hf * dhs[i] + hs * dhf[i]) / (2.0 * bound);
                    }
                    for i in 0..11 {
                        dhsf[i] = sign * PD_SHRINK * dbound[i];
                        let dq = sign * draw[i] / bound - raw.abs() * dbound[i] / (bound * bound);
                        grad_pen[i] += 2.0 * mode.penalty_weight * q * dq;
                    }
                }
            } else {
                hsf = raw;
                if track {
                    dhsf = draw;
                }
            }
        }

        let (e1, e2) = (rs[t] - p.mu_s, rf[t] - p.mu_f);
        let (a, c, b) = (hs, hf, hsf);
        let det = a * c - b * b;
        let q = c * e1 * e1 - 2.0 * b * e1 * e2 + a * e2 * e2;
        loglik += -LN_2PI - 0.5 * det.ln() - 0.5 * q / det;

        if track {
            let det2 = det * det;
            let dl_da = -0.5 * c / det - 0.5 * (e2 * e2 / det - q * c / det2);
            let dl_dc = -0.5 * a / det - 0.5 * (e1 * e1 / det - q * a / det2);
            let dl_db = b / det + e1 * e2 / det - q * b / det2;
            let mut s = [0.0; 11];
            for i in 0..11 {
                s[i] = dl_da * dhs[i] + dl_dc * dhf[i] + dl_db * dhsf[i];
            }
            s[9] += (c * e1 - b * e2) / det;
            s[10] += (a * e2 - b * e1) / det;
            for i in 0..11 {
                grad[i] += s[i];
            }
            if let Some(sc) = scores.as_mut() {
                sc.push(s);
            }
        }
    }
    VechEvaluation {
        loglik,
        penalty,
        grad_loglik: grad,
        grad_penalty: grad_pen,
        scores,
    }
}

/// Analytic gradient of the log-likelihood (natural-parameter order, see
/// [`super::VECH_PARAM_NAMES`]) with the recursion seeded at `seed`.
pub fn loglik_gradient(pair: &AlignedPair, p: &VechGarchParams, seed: CovSeed) -> Result<[f64; 11]> {
    p.validate()?;
    let mode = EvalMode {
        gradient: true,
        ..EvalMode::default()
    };
    Ok(evaluate(pair.cash().returns(), pair.futures().returns(), p, seed, mode).grad_loglik)
}

/// Log-likelihood with the recursion seeded at `seed`.
pub fn loglik_seeded(pair: &AlignedPair, p: &VechGarchParams, seed: CovSeed) -> Result<f64> {
    p.validate()?;
    Ok(evaluate(pair.cash().returns(), pair.futures().returns(), p, seed, EvalMode::default()).loglik)
}

/// Advances each recursion once past the end of `path`.
pub fn forecast_one_step(path: &CovariancePath, p: &VechGarchParams) -> Result<CovForecast> {
    let t = path
        .len()
        .checked_sub(1)
        .ok_or(Error::TooShort { needed: 1, got: 0 })?;
    let (es, ef) = (path.eps_s[t], path.eps_f[t]);
    let hs = p.s.step(es * es, path.hs[t]);
    let hf = p.f.step(ef * ef, path.hf[t]);
    let (hsf, _) = pd_guard(hs, hf, p.sf.step(es * ef, path.hsf[t]));
    Ok(CovForecast { hs, hf, hsf })
}

/// `k`-step forecast (k >= 1): beyond the first step the expected squared
/// shock equals the forecast variance.
pub fn forecast_ahead(path: &CovariancePath, p: &VechGarchParams, k: usize) -> Result<CovForecast> {
    let mut f = forecast_one_step(path, p)?;
    for _ in 1..k {
        let hs = p.s.omega + p.s.persistence() * f.hs;
        let hf = p.f.omega + p.f.persistence() * f.hf;
        let (hsf, _) = pd_guard(hs, hf, p.sf.omega + p.sf.persistence() * f.hsf);
        f = CovForecast { hs, hf, hsf };
    }
    Ok(f)
}

/// First return date of simulated pairs.
pub fn simulation_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(1993, 3, 29).expect("valid date")
}

/// Simulates `n` observations of the pair with bivariate normal shocks;
/// 500 burn-in steps are discarded. Deterministic in `seed`.
pub fn simulate(p: &VechGarchParams, n: usize, seed: u64) -> Result<AlignedPair> {
    let (rs, rf) = simulate_returns(p, n, seed)?;
    let dates = business_days(simulation_start(), n);
    AlignedPair::new(
        ReturnSeries::new("cash", dates.clone(), rs, 1)?,
        ReturnSeries::new("futures", dates, rf, 1)?,
    )
}

/// Raw cash and futures return vectors of [`simulate`].
pub fn simulate_returns(p: &VechGarchParams, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = CovSeed::unconditional(p);
    let (mut hs, mut hf) = (u.hs, u.hf);
    let (mut hsf, _) = pd_guard(hs, hf, u.hsf);
    let (mut es, mut ef) = (0.0, 0.0);
    let mut rs = Vec::with_capacity(n);
    let mut rf = Vec::with_capacity(n);
    for t in 0..(n + BURN_IN) {
        if t > 0 {
            hs = p.s.step(es * es, hs);
            hf = p.f.step(ef * ef, hf);
            hsf = pd_guard(hs, hf, p.sf.step(es * ef, hsf)).0;
        }
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let l11 = hs.sqrt();
        let l21 = hsf / l11;
        let l22 = (hf - l21 * l21).max(0.0).sqrt();
        es = l11 * z1;
        ef = l21 * z1 + l22 * z2;
        if t >= BURN_IN {
            rs.push(p.mu_s + es);
            rf.push(p.mu_f + ef);
        }
    }
    Ok((rs, rf))
}

/// Sample correlation of a simulated pair, a convenience for checks.
pub fn sample_correlation(pair: &AlignedPair) -> f64 {
    stats::covariance_sample(pair.cash().returns(), pair.futures().returns())
        / (stats::variance_sample(pair.cash().returns())
            * stats::variance_sample(pair.futures().returns()))
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garch::GarchTriple;
    use rand::Rng;

    fn pair_from(rs: Vec<f64>, rf: Vec<f64>) -> AlignedPair {
        let dates = business_days(simulation_start(), rs.len());
        AlignedPair::new(
            ReturnSeries::new("c", dates.clone(), rs, 1).unwrap(),
            ReturnSeries::new("f", dates, rf, 1).unwrap(),
        )
        .unwrap()
    }

    fn constant_params() -> VechGarchParams {
        VechGarchParams::new(
            GarchTriple::new(2e-4, 0.0, 0.0),
            GarchTriple::new(1e-4, 0.0, 0.0),
            GarchTriple::new(3e-4, 0.0, 0.0),
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_dynamics_give_constant_path() {
        let p = constant_params();
        let pair = simulate(&VechGarchParams::ftse_like(), 50, 1).unwrap();
        let seed = CovSeed {
            hs: 2e-4,
            hf: 3e-4,
            hsf: 1e-4,
        };
        let path = filter_vech_seeded(&pair, &p, seed).unwrap();
        assert!(path.hs.iter().all(|v| *v == 2e-4));
        assert!(path.hf.iter().all(|v| *v == 3e-4));
        assert!(path.hsf.iter().all(|v| *v == 1e-4));
        // seeding at sample moments: from t = 1 on the path is omega
        let path = filter_vech(&pair, &p).unwrap();
        assert!(path.hs[1..].iter().all(|v| *v == 2e-4));
        assert!(path.hsf[1..].iter().all(|v| *v == 1e-4));
    }

    #[test]
    fn identical_legs_symmetric_params() {
        let (rs, _) = simulate_returns(&VechGarchParams::ftse_like(), 300, 2).unwrap();
        let pair = pair_from(rs.clone(), rs);
        let t = GarchTriple::new(2e-6, 0.06, 0.92);
        let p = VechGarchParams::new(t, t, t, 0.0, 0.0).unwrap();
        let path = filter_vech(&pair, &p).unwrap();
        for i in 0..path.len() {
            assert_eq!(path.hs[i], path.hf[i]);
            // the guard keeps the covariance a hair inside the PD boundary
            assert!((path.hsf[i] / path.hs[i] - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn ftse_like_correlation_path() {
        let p = VechGarchParams::ftse_like();
        let pair = simulate(&p, 5000, 3).unwrap();
        let path = filter_vech(&pair, &p).unwrap();
        let inside = (0..path.len())
            .filter(|&t| {
                let c = path.correlation(t);
                c > 0.9 && c < 1.0
            })
            .count();
        assert!(inside as f64 >= 0.95 * path.len() as f64, "{inside}");
    }

    #[test]
    fn loglik_closed_forms() {
        let pair = pair_from(vec![0.0], vec![0.0]);
        let p = VechGarchParams::new(
            GarchTriple::new(1.0, 0.0, 0.0),
            GarchTriple::new(0.0, 0.0, 0.0),
            GarchTriple::new(1.0, 0.0, 0.0),
            0.0,
            0.0,
        )
        .unwrap();
        let seed = CovSeed {
            hs: 1.0,
            hf: 1.0,
            hsf: 0.0,
        };
        let ll = loglik_seeded(&pair, &p, seed).unwrap();
        assert!((ll + (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn loglik_scaling_identity() {
        // Doubling every H and every squared residual: residuals scale by
        // sqrt(2), omegas and seeds by 2, alphas and betas unchanged.
        let p = VechGarchParams::ftse_like();
        let (rs, rf) = simulate_returns(&p, 400, 4).unwrap();
        let k = 2f64.sqrt();
        let mut q = p;
        q.mu_s *= k;
        q.mu_f *= k;
        q.s.omega *= 2.0;
        q.sf.omega *= 2.0;
        q.f.omega *= 2.0;
        let a = pair_from(rs.clone(), rf.clone());
        let b = pair_from(rs.iter().map(|v| v * k).collect(), rf.iter().map(|v| v * k).collect());
        let sa = CovSeed::from_pair(&a, &p);
        let sb = CovSeed {
            hs: 2.0 * sa.hs,
            hf: 2.0 * sa.hf,
            hsf: 2.0 * sa.hsf,
        };
        let la = loglik_seeded(&a, &p, sa).unwrap();
        let lb = loglik_seeded(&b, &q, sb).unwrap();
        let expected = la - 400.0 * 2f64.ln();
        assert!((lb - expected).abs() < 1e-8 * expected.abs(), "{lb} vs {expected}");
    }

    fn random_point(rng: &mut ChaCha8Rng) -> VechGarchParams {
        let mut tri = |omega: f64| {
            let a: f64 = rng.random_range(0.02..0.2);
            let b: f64 = rng.random_range(0.5..(0.97 - a));
            GarchTriple::new(omega, a, b)
        };
        let s = tri(2e-5);
        let f = tri(2.5e-5);
        // PSD coefficient matrices keep every step positive definite
        let rho: f64 = rng.random_range(0.5..0.95);
        let sf = GarchTriple::new(
            rho * (s.omega * f.omega).sqrt(),
            rho * (s.alpha * f.alpha).sqrt(),
            rho * (s.beta * f.beta).sqrt(),
        );
        VechGarchParams::new(s, sf, f, 3e-4, 2e-4).unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let truth = VechGarchParams::ftse_like();
        let pair = simulate(&truth, 600, 8).unwrap();
        for _ in 0..10 {
            let p = random_point(&mut rng);
            let seed = CovSeed::from_pair(&pair, &p);
            let g = loglik_gradient(&pair, &p, seed).unwrap();
            let base = p.to_vec();
            for i in 0..11 {
                let h = if i >= 9 { 1e-7 } else { 1e-6 * base[i].abs() };
                let at = |d: f64| {
                    let mut v = base;
                    v[i] += d;
                    let q = VechGarchParams::from_slice(&v);
                    evaluate(pair.cash().returns(), pair.futures().returns(), &q, seed, EvalMode::default()).loglik
                };
                let fd = (at(h) - at(-h)) / (2.0 * h);
                let rel = (fd - g[i]).abs() / g[i].abs().max(1.0);
                assert!(rel < 1e-5, "param {i}: fd={fd} analytic={}", g[i]);
            }
        }
    }

    #[test]
    fn penalty_gradient_matches_central_differences() {
        // strong covariance dynamics force clamping
        let pair = simulate(&VechGarchParams::ftse_like(), 300, 12).unwrap();
        let p = VechGarchParams::new(
            GarchTriple::new(1e-6, 0.05, 0.93),
            GarchTriple::new(5e-6, 0.15, 0.84),
            GarchTriple::new(1e-6, 0.05, 0.93),
            0.0,
            0.0,
        )
        .unwrap();
        let seed = CovSeed::from_pair(&pair, &p);
        let mode = EvalMode {
            gradient: true,
            ..EvalMode::default()
        };
        let ev = evaluate(pair.cash().returns(), pair.futures().returns(), &p, seed, mode);
        assert!(ev.penalty > 0.0);
        let base = p.to_vec();
        for i in 0..9 {
            // the clamped likelihood is steep, so use Richardson-extrapolated differences
            let h = if matches!(i, 0 | 3 | 6) { 1e-3 * base[i].abs() } else { 1e-6 };
            let at = |d: f64| {
                let mut v = base;
                v[i] += d;
                let q = VechGarchParams::from_slice(&v);
                let e = evaluate(pair.cash().returns(), pair.futures().returns(), &q, seed, EvalMode::default());
                (e.loglik, e.penalty)
            };
            let central = |h: f64| {
                let (up, dn) = (at(h), at(-h));
                ((up.0 - dn.0) / (2.0 * h), (up.1 - dn.1) / (2.0 * h))
            };
            let (c1, c2) = (central(h), central(h / 2.0));
            let fd_ll = (4.0 * c2.0 - c1.0) / 3.0;
            let fd_pen = (4.0 * c2.1 - c1.1) / 3.0;
            let rel = |fd: f64, g: f64| (fd - g).abs() / g.abs().max(1.0);
            assert!(rel(fd_ll, ev.grad_loglik[i]) < 5e-3, "ll {i}: {fd_ll} vs {}", ev.grad_loglik[i]);
            assert!(rel(fd_pen, ev.grad_penalty[i]) < 1e-4, "pen {i}: {fd_pen} vs {}", ev.grad_penalty[i]);
        }
    }

    #[test]
    fn pd_guard_bounds_every_step() {
        let pair = simulate(&VechGarchParams::ftse_like(), 2000, 13).unwrap();
        let p = VechGarchParams::new(
            GarchTriple::new(1e-6, 0.05, 0.93),
            GarchTriple::new(5e-6, 0.15, 0.84),
            GarchTriple::new(1e-6, 0.05, 0.93),
            0.0,
            0.0,
        )
        .unwrap();
        let path = filter_vech(&pair, &p).unwrap();
        assert!(!path.clamped.is_empty());
        for t in 0..path.len() {
            assert!(path.hs[t] > 0.0 && path.hf[t] > 0.0);
            assert!(path.hsf[t].abs() <= (path.hs[t] * path.hf[t]).sqrt() * (1.0 - 1e-10));
        }
        let seed = CovSeed::from_pair(&pair, &p);
        assert!(matches!(loglik_unguarded(&pair, &p, seed), Err(Error::NonPdMatrix(_))));
    }

    #[test]
    fn forecast_examples() {
        let p = constant_params();
        let pair = simulate(&VechGarchParams::ftse_like(), 20, 1).unwrap();
        let path = filter_vech(&pair, &p).unwrap();
        let f = forecast_one_step(&path, &p).unwrap();
        assert_eq!((f.hs, f.hf, f.hsf), (2e-4, 3e-4, 1e-4));
    }

    #[test]
    fn forecast_matches_refilter_exactly() {
        let p = VechGarchParams::ftse_like();
        let full = simulate(&p, 501, 21).unwrap();
        let head = full.between(full.dates()[0], full.dates()[499]);
        let seed = CovSeed::from_pair(&head, &p);
        let path_head = filter_vech_seeded(&head, &p, seed).unwrap();
        let path_full = filter_vech_seeded(&full, &p, seed).unwrap();
        let f = forecast_one_step(&path_head, &p).unwrap();
        assert_eq!(f.hs, path_full.hs[500]);
        assert_eq!(f.hf, path_full.hf[500]);
        assert_eq!(f.hsf, path_full.hsf[500]);
    }

    #[test]
    fn iterated_forecast_reaches_unconditional() {
        let p = VechGarchParams::ftse_like();
        let pair = simulate(&p, 300, 22).unwrap();
        let path = filter_vech(&pair, &p).unwrap();
        let f = forecast_ahead(&path, &p, 20_000).unwrap();
        assert!((f.hs / p.s.unconditional() - 1.0).abs() < 1e-9);
        assert!((f.hf / p.f.unconditional() - 1.0).abs() < 1e-9);
        assert!((f.hsf / p.sf.unconditional() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn simulation_properties() {
        let p = VechGarchParams::ftse_like();
        let a = simulate(&p, 1000, 5).unwrap();
        assert_eq!(a, simulate(&p, 1000, 5).unwrap());
        assert_ne!(a, simulate(&p, 1000, 6).unwrap());

        let long = simulate(&p, 50_000, 7).unwrap();
        let corr = sample_correlation(&long);
        assert!((corr - p.unconditional_correlation()).abs() < 0.02, "{corr}");
        let lm = crate::diagnostics::engle_lm(long.cash().returns(), 4).unwrap();
        assert_eq!(lm.verdict, crate::diagnostics::Verdict::Reject);
    }

    #[test]
    fn filtered_variance_mean_reverts() {
        let p = VechGarchParams::ftse_like();
        let pair = simulate(&p, 50_000, 17).unwrap();
        let path = filter_vech(&pair, &p).unwrap();
        let avg_s = stats::mean(&path.hs);
        let avg_f = stats::mean(&path.hf);
        assert!((avg_s / p.s.unconditional() - 1.0).abs() < 0.10, "{avg_s}");
        assert!((avg_f / p.f.unconditional() - 1.0).abs() < 0.10, "{avg_f}");
        let (_, hi) = stats::min_max(&path.hs);
        assert!(hi.is_finite() && hi < 100.0 * p.s.unconditional());
    }
}
