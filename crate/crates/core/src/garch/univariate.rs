//! Univariate GARCH(1,1) filtering, likelihood and simulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::params::UniGarchParams;
use super::BURN_IN;
use crate::error::Result;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Conditional variance path seeded at the unconditional variance.
pub fn filter_univariate(r: &[f64], p: &UniGarchParams) -> Result<Vec<f64>> {
    p.validate()?;
    Ok(filter_seeded(r, p, p.unconditional_variance()))
}

/// Conditional variance path with `sigma2_0 = seed`.
pub fn filter_seeded(r: &[f64], p: &UniGarchParams, seed: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(r.len());
    let mut h = seed;
    for t in 0..r.len() {
        if t > 0 {
            let e = r[t - 1] - p.mu;
            h = p.omega + p.alpha * e * e + p.beta * h;
        }
        out.push(h);
    }
    out
}

/// Gaussian log-likelihood and its gradient with respect to
/// `(omega, alpha, beta, mu)`; optionally the per-observation scores.
pub(crate) struct UniEvaluation {
    pub loglik: f64,
    pub gradient: [f64; 4],
    pub scores: Option<Vec<[f64; 4]>>,
}

pub(crate) fn evaluate(r: &[f64], p: &UniGarchParams, seed: f64, want_scores: bool) -> UniEvaluation {
    let mut loglik = 0.0;
    let mut grad = [0.0; 4];
    let mut scores = want_scores.then(|| Vec::with_capacity(r.len()));
    let mut h = seed;
    let mut dh = [0.0; 4];
    for t in 0..r.len() {
        if t > 0 {
            let e = r[t - 1] - p.mu;
            let x = e * e;
            let prev = h;
            h = p.omega + p.alpha * x + p.beta * prev;
            let mut nd = [0.0; 4];
            for k in 0..4 {
                nd[k] = p.beta * dh[k];
            }
            nd[0] += 1.0;
            nd[1] += x;
            nd[2] += prev;
            nd[3] += p.alpha * (-2.0 * e);
            dh = nd;
        }
        let e = r[t] - p.mu;
        let lt = -0.5 * (LN_2PI + h.ln() + e * e / h);
        let dl_dh = -0.5 * (1.0 / h - e * e / (h * h));
        let mut s = [0.0; 4];
        for k in 0..4 {
            s[k] = dl_dh * dh[k];
        }
        s[3] += e / h;
        loglik += lt;
        for k in 0..4 {
            grad[k] += s[k];
        }
        if let Some(sc) = scores.as_mut() {
            sc.push(s);
        }
    }
    UniEvaluation {
        loglik,
        gradient: grad,
        scores,
    }
}

/// Gaussian log-likelihood with the recursion seeded at `seed`.
pub fn loglik_univariate(r: &[f64], p: &UniGarchParams, seed: f64) -> f64 {
    evaluate(r, p, seed, false).loglik
}

/// Simulated returns `mu + sigma_t z_t` with standard normal `z_t`; the first
/// 500 draws are discarded as burn-in.
pub fn simulate_univariate(p: &UniGarchParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = p.unconditional_variance();
    let mut prev_e = 0.0;
    let mut out = Vec::with_capacity(n);
    for t in 0..(n + BURN_IN) {
        if t > 0 {
            h = p.omega + p.alpha * prev_e * prev_e + p.beta * h;
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        let e = h.sqrt() * z;
        prev_e = e;
        if t >= BURN_IN {
            out.push(p.mu + e);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_arch_is_constant() {
        let p = UniGarchParams::new(2e-4, 0.0, 0.0, 0.0).unwrap();
        let path = filter_univariate(&[0.1, -0.3, 0.05, 0.2], &p).unwrap();
        assert!(path.iter().all(|h| *h == 2e-4));
    }

    #[test]
    fn zero_returns_decay_geometrically() {
        let p = UniGarchParams::new(1e-5, 0.05, 0.9, 0.0).unwrap();
        let path = filter_univariate(&[0.0; 200], &p).unwrap();
        let limit = 1e-5 / (1.0 - 0.9);
        assert!((path[0] - 1e-5 / 0.05).abs() < 1e-18);
        for w in path.windows(2) {
            // (h_t - limit) = beta (h_{t-1} - limit)
            assert!(((w[1] - limit) - 0.9 * (w[0] - limit)).abs() < 1e-17);
        }
        assert!((path[199] - limit).abs() / limit < 1e-6);
    }

    #[test]
    fn hand_recursion_two_steps() {
        let p = UniGarchParams::new(0.00001, 0.05, 0.90, 0.0).unwrap();
        let y1 = 0.02;
        let path = filter_univariate(&[y1, -0.01, 0.0], &p).unwrap();
        // seed = 1e-5 / 0.05 = 2e-4
        // h1 = 1e-5 + 0.05 * 4e-4 + 0.9 * 2e-4 = 2.1e-4
        // h2 = 1e-5 + 0.05 * 1e-4 + 0.9 * 2.1e-4 = 2.04e-4
        assert!((path[0] - 2.0e-4).abs() < 1e-18);
        assert!((path[1] - 2.1e-4).abs() < 1e-18);
        assert!((path[2] - 2.04e-4).abs() < 1e-18);
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let p = UniGarchParams::new(2e-5, 0.08, 0.85, 0.0003).unwrap();
        let r = simulate_univariate(&p, 1000, 5).unwrap();
        let seed = 1.5e-4;
        let ev = evaluate(&r, &p, seed, false);
        let base = [p.omega, p.alpha, p.beta, p.mu];
        for k in 0..4 {
            let step = 1e-6 * base[k].abs().max(1e-4);
            let at = |d: f64| {
                let mut v = base;
                v[k] += d;
                let q = UniGarchParams {
                    omega: v[0],
                    alpha: v[1],
                    beta: v[2],
                    mu: v[3],
                };
                loglik_univariate(&r, &q, seed)
            };
            let fd = (at(step) - at(-step)) / (2.0 * step);
            let rel = (fd - ev.gradient[k]).abs() / ev.gradient[k].abs().max(1.0);
            assert!(rel < 1e-5, "param {k}: fd={fd} analytic={}", ev.gradient[k]);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let p = UniGarchParams::new(1e-5, 0.1, 0.8, 0.0).unwrap();
        assert_eq!(
            simulate_univariate(&p, 100, 3).unwrap(),
            simulate_univariate(&p, 100, 3).unwrap()
        );
        assert_ne!(
            simulate_univariate(&p, 100, 3).unwrap(),
            simulate_univariate(&p, 100, 4).unwrap()
        );
    }
}
