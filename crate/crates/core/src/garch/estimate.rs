//! (Q)MLE of the diagonal VECH and univariate GARCH(1,1) models.
//!
//! Estimation runs on returns standardized by their sample standard
//! deviation, so the intercepts are O(0.01) and gradient tolerances are
//! meaningful. Parameters are mapped to unconstrained coordinates: log for
//! the variance intercepts, a three-way softmax for each `(alpha, beta)` pair
//! (so `alpha, beta > 0` and `alpha + beta < 1`), identity for the
//! covariance intercept and the means. The objective is the average negative
//! log-likelihood plus the clamp penalty.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::params::{GarchTriple, UniGarchParams, VechGarchParams, VECH_PARAM_NAMES};
use super::univariate;
use super::vech::{self, CovSeed, EvalMode, DEFAULT_PENALTY_WEIGHT};
use crate::data::AlignedPair;
use crate::error::{Error, Result};
use crate::linalg::spd_inverse;
use crate::optim::{minimize, OptimOptions};
use crate::stats;

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    /// Minimum number of observations.
    pub min_obs: usize,
    /// Estimate the means jointly instead of fixing them at sample means.
    pub joint_means: bool,
    pub optim: OptimOptions,
    pub penalty_weight: f64,
    /// Jittered restarts tried when the first run does not converge.
    pub restarts: usize,
    pub jitter_seed: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            min_obs: 100,
            joint_means: false,
            optim: OptimOptions::default(),
            penalty_weight: DEFAULT_PENALTY_WEIGHT,
            restarts: 3,
            jitter_seed: 0x5eed,
        }
    }
}

/// Point estimate with plain (inverse Hessian) and robust (sandwich)
/// standard errors. Standard errors are NaN when the Hessian is not
/// negative definite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamEstimate {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub robust_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimationResult<P> {
    pub params: P,
    pub loglik: f64,
    pub std_errors: Vec<ParamEstimate>,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the objective gradient in unconstrained coordinates.
    pub gradient_norm: f64,
    pub n_obs: usize,
}

impl<P> EstimationResult<P> {
    pub fn get(&self, name: &str) -> Option<&ParamEstimate> {
        self.std_errors.iter().find(|p| p.name == name)
    }

    /// Flat `parameter,estimate,se,robust_se` text block.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::from("parameter,estimate,se,robust_se\n");
        for p in &self.std_errors {
            let _ = writeln!(out, "{},{:e},{:e},{:e}", p.name, p.estimate, p.se, p.robust_se);
        }
        let _ = writeln!(out, "loglik,{:e},,", self.loglik);
        let _ = writeln!(out, "converged,{},,", self.converged);
        let _ = writeln!(out, "iterations,{},,", self.iterations);
        let _ = writeln!(out, "n_obs,{},,", self.n_obs);
        out
    }
}

/// Parses the parameter rows of [`EstimationResult::to_kv_string`].
pub fn parse_kv(text: &str) -> Result<Vec<ParamEstimate>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::ParseError {
                row: i + 1,
                message: format!("expected 4 columns, got {}", cols.len()),
            });
        }
        if matches!(cols[0], "loglik" | "converged" | "iterations" | "n_obs") {
            continue;
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|e| Error::ParseError {
                row: i + 1,
                message: format!("{s:?}: {e}"),
            })
        };
        out.push(ParamEstimate {
            name: cols[0].to_string(),
            estimate: num(cols[1])?,
            se: num(cols[2])?,
            robust_se: num(cols[3])?,
        });
    }
    Ok(out)
}

/// Rebuilds VECH parameters from parsed estimates; missing means default to 0.
pub fn vech_from_estimates(rows: &[ParamEstimate]) -> Result<VechGarchParams> {
    let mut v = [0.0; 11];
    for (i, name) in VECH_PARAM_NAMES.iter().enumerate() {
        match rows.iter().find(|r| r.name == *name) {
            Some(r) => v[i] = r.estimate,
            None if i >= 9 => {}
            None => return Err(Error::ParseError { row: 0, message: format!("missing {name}") }),
        }
    }
    let p = VechGarchParams::from_slice(&v);
    p.validate()?;
    Ok(p)
}

const LOGIT_CAP: f64 = 30.0;

#[derive(Debug, Clone, Copy)]
enum Coord {
    Log(usize),
    Raw(usize),
    Simplex(usize, usize),
}

struct Eval {
    loglik: f64,
    penalty: f64,
    grad_ll: Vec<f64>,
    grad_pen: Vec<f64>,
    scores: Option<Vec<Vec<f64>>>,
}

trait Model {
    fn coords(&self) -> &[Coord];
    fn dim(&self) -> usize;
    fn n_obs(&self) -> usize;
    fn eval(&self, nat: &[f64], gradient: bool, scores: bool) -> Eval;
}

fn to_natural(coords: &[Coord], u: &[f64]) -> Vec<f64> {
    let mut nat = vec![0.0; u.len()];
    for c in coords {
        match *c {
            Coord::Log(i) => nat[i] = u[i].exp(),
            Coord::Raw(i) => nat[i] = u[i],
            Coord::Simplex(i, j) => {
                // capped so that alpha + beta stays representably below 1
                let (ui, uj) = (u[i].min(LOGIT_CAP), u[j].min(LOGIT_CAP));
                let m = ui.max(uj).max(0.0);
                let (ei, ej, e0) = ((ui - m).exp(), (uj - m).exp(), (-m).exp());
                let s = e0 + ei + ej;
                nat[i] = ei / s;
                nat[j] = ej / s;
            }
        }
    }
    nat
}

fn to_unconstrained(coords: &[Coord], nat: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; nat.len()];
    for c in coords {
        match *c {
            Coord::Log(i) => u[i] = nat[i].ln(),
            Coord::Raw(i) => u[i] = nat[i],
            Coord::Simplex(i, j) => {
                let a = nat[i].max(1e-8);
                let b = nat[j].max(1e-8);
                let rest = (1.0 - a - b).max(1e-8);
                u[i] = (a / rest).ln();
                u[j] = (b / rest).ln();
            }
        }
    }
    u
}

/// `J^T g` where `J = d nat / d u`.
fn pull_back(coords: &[Coord], nat: &[f64], g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    for c in coords {
        match *c {
            Coord::Log(i) => out[i] = g[i] * nat[i],
            Coord::Raw(i) => out[i] = g[i],
            Coord::Simplex(i, j) => {
                let (a, b) = (nat[i], nat[j]);
                out[i] = g[i] * a * (1.0 - a) - g[j] * a * b;
                out[j] = -g[i] * a * b + g[j] * b * (1.0 - b);
            }
        }
    }
    out
}

struct FitOutput {
    nat: Vec<f64>,
    loglik: f64,
    converged: bool,
    iterations: usize,
    gradient_norm: f64,
    se: Vec<f64>,
    robust_se: Vec<f64>,
}

fn fit<M: Model>(model: &M, init_nat: &[f64], opts: &EstimateOptions) -> FitOutput {
    let coords = model.coords().to_vec();
    let n = model.n_obs() as f64;
    let objective = |u: &[f64]| -> (f64, Vec<f64>) {
        let nat = to_natural(&coords, u);
        let e = model.eval(&nat, true, false);
        let value = -(e.loglik - e.penalty) / n;
        let g_nat: Vec<f64> = e
            .grad_ll
            .iter()
            .zip(&e.grad_pen)
            .map(|(l, p)| -(l - p) / n)
            .collect();
        if !value.is_finite() || g_nat.iter().any(|v| !v.is_finite()) {
            return (f64::NAN, vec![f64::NAN; u.len()]);
        }
        (value, pull_back(&coords, &nat, &g_nat))
    };

    let u0 = to_unconstrained(&coords, init_nat);
    let mut best = minimize(objective, &u0, &opts.optim);
    let mut iterations = best.iterations;
    if !best.converged && opts.restarts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.jitter_seed);
        let jitter = Normal::new(0.0, 0.3).expect("valid sd");
        for _ in 0..opts.restarts {
            let start: Vec<f64> = u0.iter().map(|v| v + jitter.sample(&mut rng)).collect();
            let r = minimize(objective, &start, &opts.optim);
            iterations += r.iterations;
            let better = r.value.is_finite()
                && (!best.value.is_finite()
                    || (r.converged && !best.converged)
                    || (r.converged == best.converged && r.value < best.value));
            if better {
                best = r;
            }
            if best.converged {
                break;
            }
        }
    }

    let nat = to_natural(&coords, &best.x);
    let e = model.eval(&nat, true, true);
    let (se, robust_se) = standard_errors(model, &nat, e.scores.as_deref().unwrap_or(&[]));
    FitOutput {
        loglik: e.loglik,
        converged: best.converged,
        iterations,
        gradient_norm: best.grad_norm(),
        nat,
        se,
        robust_se,
    }
}

/// Plain `A^-1` and sandwich `A^-1 B A^-1` standard errors, with `A` the
/// negative central-difference Hessian of the analytic gradient and `B` the
/// outer product of per-observation scores.
fn standard_errors<M: Model>(model: &M, nat: &[f64], scores: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let k = model.dim();
    let nan = || vec![f64::NAN; k];
    let mut hess = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        let h = 1e-5 * nat[j].abs().max(1e-3);
        let mut up = nat.to_vec();
        let mut dn = nat.to_vec();
        up[j] += h;
        dn[j] -= h;
        let gu = model.eval(&up, true, false).grad_ll;
        let gd = model.eval(&dn, true, false).grad_ll;
        for i in 0..k {
            hess[(i, j)] = (gu[i] - gd[i]) / (2.0 * h);
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return (nan(), nan());
    }
    let a = -(&hess + hess.transpose()) * 0.5;
    let Some(a_inv) = spd_inverse(&a) else {
        return (nan(), nan());
    };
    let mut b = DMatrix::<f64>::zeros(k, k);
    for s in scores {
        for i in 0..k {
            for j in 0..k {
                b[(i, j)] += s[i] * s[j];
            }
        }
    }
    let sandwich = &a_inv * b * &a_inv;
    let se = (0..k).map(|i| a_inv[(i, i)].max(0.0).sqrt()).collect();
    let robust = (0..k).map(|i| sandwich[(i, i)].max(0.0).sqrt()).collect();
    (se, robust)
}

struct VechModel {
    rs: Vec<f64>,
    rf: Vec<f64>,
    seed: CovSeed,
    mu: (f64, f64),
    joint: bool,
    coords: Vec<Coord>,
    penalty_weight: f64,
}

impl VechModel {
    fn params(&self, nat: &[f64]) -> VechGarchParams {
        let mut v = [0.0; 11];
        v[..9].copy_from_slice(&nat[..9]);
        if self.joint {
            v[9] = nat[9];
            v[10] = nat[10];
        } else {
            v[9] = self.mu.0;
            v[10] = self.mu.1;
        }
        VechGarchParams::from_slice(&v)
    }
}

impl Model for VechModel {
    fn coords(&self) -> &[Coord] {
        &self.coords
    }

    fn dim(&self) -> usize {
        if self.joint {
            11
        } else {
            9
        }
    }

    fn n_obs(&self) -> usize {
        self.rs.len()
    }

    fn eval(&self, nat: &[f64], gradient: bool, scores: bool) -> Eval {
        let p = self.params(nat);
        let mode = EvalMode {
            gradient,
            scores,
            penalty_weight: self.penalty_weight,
        };
        let e = vech::evaluate(&self.rs, &self.rf, &p, self.seed, mode);
        let k = self.dim();
        Eval {
            loglik: e.loglik,
            penalty: e.penalty,
            grad_ll: e.grad_loglik[..k].to_vec(),
            grad_pen: e.grad_penalty[..k].to_vec(),
            scores: e.scores.map(|s| s.into_iter().map(|row| row[..k].to_vec()).collect()),
        }
    }
}

fn check_len(n: usize, opts: &EstimateOptions) -> Result<()> {
    if n < opts.min_obs {
        return Err(Error::TooShort {
            needed: opts.min_obs,
            got: n,
        });
    }
    Ok(())
}

fn positive_scale(x: &[f64], leg: &str) -> Result<f64> {
    let (lo, hi) = stats::min_max(x);
    let sd = stats::std_dev_sample(x);
    if lo == hi || !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateData(format!("{leg} returns are constant")));
    }
    Ok(sd)
}

/// Default starting point: alpha 0.05, beta 0.90 per equation with
/// intercepts targeting the sample (co)variances.
pub fn default_vech_init(pair: &AlignedPair) -> VechGarchParams {
    let rs = pair.cash().returns();
    let rf = pair.futures().returns();
    let (a, b) = (0.05, 0.90);
    let k = 1.0 - a - b;
    VechGarchParams {
        s: GarchTriple::new(stats::variance_ml(rs) * k, a, b),
        sf: GarchTriple::new(stats::covariance_ml(rs, rf) * k, a, b),
        f: GarchTriple::new(stats::variance_ml(rf) * k, a, b),
        mu_s: stats::mean(rs),
        mu_f: stats::mean(rf),
    }
}

/// Fits the diagonal VECH GARCH(1,1) to `pair`.
///
/// A run that does not converge is still returned, with `converged = false`.
pub fn estimate(
    pair: &AlignedPair,
    init: Option<&VechGarchParams>,
    opts: &EstimateOptions,
) -> Result<EstimationResult<VechGarchParams>> {
    let rs = pair.cash().returns();
    let rf = pair.futures().returns();
    check_len(rs.len(), opts)?;
    let ss = positive_scale(rs, "cash")?;
    let sf = positive_scale(rf, "futures")?;
    let init = match init {
        Some(p) => {
            p.validate()?;
            *p
        }
        None => default_vech_init(pair),
    };
    let mu = if opts.joint_means {
        (init.mu_s, init.mu_f)
    } else {
        (stats::mean(rs), stats::mean(rf))
    };

    let zs: Vec<f64> = rs.iter().map(|v| v / ss).collect();
    let zf: Vec<f64> = rf.iter().map(|v| v / sf).collect();
    let seed = CovSeed::from_sample(&zs, &zf, mu.0 / ss, mu.1 / sf);
    let factors = [ss * ss, 1.0, 1.0, ss * sf, 1.0, 1.0, sf * sf, 1.0, 1.0, ss, sf];

    let mut coords = vec![
        Coord::Log(0),
        Coord::Simplex(1, 2),
        Coord::Raw(3),
        Coord::Simplex(4, 5),
        Coord::Log(6),
        Coord::Simplex(7, 8),
    ];
    if opts.joint_means {
        coords.push(Coord::Raw(9));
        coords.push(Coord::Raw(10));
    }
    let model = VechModel {
        rs: zs,
        rf: zf,
        seed,
        mu: (mu.0 / ss, mu.1 / sf),
        joint: opts.joint_means,
        coords,
        penalty_weight: opts.penalty_weight,
    };
    let mut start = init;
    start.mu_s = mu.0;
    start.mu_f = mu.1;
    let mut start_nat: Vec<f64> = start
        .to_vec()
        .iter()
        .zip(&factors)
        .map(|(v, f)| v / f)
        .collect();
    // the simplex map needs strictly positive alpha and beta
    for i in [1, 2, 4, 5, 7, 8] {
        start_nat[i] = start_nat[i].max(1e-4);
    }
    start_nat.truncate(model.dim());

    let out = fit(&model, &start_nat, opts);
    let params_std = model.params(&out.nat);
    let mut natural = params_std.to_vec();
    for (v, f) in natural.iter_mut().zip(&factors) {
        *v *= f;
    }
    let params = VechGarchParams::from_slice(&natural);
    let std_errors = (0..model.dim())
        .map(|i| ParamEstimate {
            name: VECH_PARAM_NAMES[i].to_string(),
            estimate: natural[i],
            se: out.se[i] * factors[i],
            robust_se: out.robust_se[i] * factors[i],
        })
        .collect();
    Ok(EstimationResult {
        params,
        loglik: out.loglik - rs.len() as f64 * (ss * sf).ln(),
        std_errors,
        converged: out.converged,
        iterations: out.iterations,
        gradient_norm: out.gradient_norm,
        n_obs: rs.len(),
    })
}

/// Penalized objective `loglik - penalty` at `p` on the original scale, with
/// the same seeding rule as [`estimate`] (sample moments around `p`'s means).
pub fn penalized_loglik(pair: &AlignedPair, p: &VechGarchParams, opts: &EstimateOptions) -> Result<f64> {
    p.validate()?;
    let rs = pair.cash().returns();
    let rf = pair.futures().returns();
    let seed = CovSeed::from_sample(rs, rf, p.mu_s, p.mu_f);
    let mode = EvalMode {
        penalty_weight: opts.penalty_weight,
        ..EvalMode::default()
    };
    let e = vech::evaluate(rs, rf, p, seed, mode);
    Ok(e.loglik - e.penalty)
}

struct UniModel {
    r: Vec<f64>,
    seed: f64,
    mu: f64,
    joint: bool,
    coords: Vec<Coord>,
}

impl UniModel {
    fn params(&self, nat: &[f64]) -> UniGarchParams {
        UniGarchParams {
            omega: nat[0],
            alpha: nat[1],
            beta: nat[2],
            mu: if self.joint { nat[3] } else { self.mu },
        }
    }
}

impl Model for UniModel {
    fn coords(&self) -> &[Coord] {
        &self.coords
    }

    fn dim(&self) -> usize {
        if self.joint {
            4
        } else {
            3
        }
    }

    fn n_obs(&self) -> usize {
        self.r.len()
    }

    fn eval(&self, nat: &[f64], _gradient: bool, scores: bool) -> Eval {
        let p = self.params(nat);
        let e = univariate::evaluate(&self.r, &p, self.seed, scores);
        let k = self.dim();
        Eval {
            loglik: e.loglik,
            penalty: 0.0,
            grad_ll: e.gradient[..k].to_vec(),
            grad_pen: vec![0.0; k],
            scores: e.scores.map(|s| s.into_iter().map(|row| row[..k].to_vec()).collect()),
        }
    }
}

/// Fits a univariate GARCH(1,1); the recursion is seeded at the sample
/// variance of the residuals.
pub fn estimate_univariate(
    r: &[f64],
    init: Option<&UniGarchParams>,
    opts: &EstimateOptions,
) -> Result<EstimationResult<UniGarchParams>> {
    check_len(r.len(), opts)?;
    let sd = positive_scale(r, "return")?;
    let mean = stats::mean(r);
    let init = match init {
        Some(p) => {
            p.validate()?;
            *p
        }
        None => UniGarchParams {
            omega: stats::variance_ml(r) * 0.05,
            alpha: 0.05,
            beta: 0.90,
            mu: mean,
        },
    };
    let mu = if opts.joint_means { init.mu } else { mean };
    let z: Vec<f64> = r.iter().map(|v| v / sd).collect();
    let zmu = mu / sd;
    let seed = z.iter().map(|v| (v - zmu) * (v - zmu)).sum::<f64>() / z.len() as f64;
    let mut coords = vec![Coord::Log(0), Coord::Simplex(1, 2)];
    if opts.joint_means {
        coords.push(Coord::Raw(3));
    }
    let model = UniModel {
        r: z,
        seed,
        mu: zmu,
        joint: opts.joint_means,
        coords,
    };
    let factors = [sd * sd, 1.0, 1.0, sd];
    let mut start = vec![
        init.omega / factors[0],
        init.alpha.max(1e-4),
        init.beta.max(1e-4),
        zmu,
    ];
    start.truncate(model.dim());
    let out = fit(&model, &start, opts);
    let p = model.params(&out.nat);
    let params = UniGarchParams {
        omega: p.omega * factors[0],
        alpha: p.alpha,
        beta: p.beta,
        mu: p.mu * sd,
    };
    let values = [params.omega, params.alpha, params.beta, params.mu];
    let names = ["omega", "alpha", "beta", "mu"];
    let std_errors = (0..model.dim())
        .map(|i| ParamEstimate {
            name: names[i].to_string(),
            estimate: values[i],
            se: out.se[i] * factors[i],
            robust_se: out.robust_se[i] * factors[i],
        })
        .collect();
    Ok(EstimationResult {
        params,
        loglik: out.loglik - r.len() as f64 * sd.ln(),
        std_errors,
        converged: out.converged,
        iterations: out.iterations,
        gradient_norm: out.gradient_norm,
        n_obs: r.len(),
    })
}
