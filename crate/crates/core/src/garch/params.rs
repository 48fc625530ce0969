use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Univariate GARCH(1,1): `sigma2_t = omega + alpha * eps_{t-1}^2 + beta * sigma2_{t-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniGarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
}

impl UniGarchParams {
    pub fn new(omega: f64, alpha: f64, beta: f64, mu: f64) -> Result<Self> {
        let p = Self {
            omega,
            alpha,
            beta,
            mu,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            omega,
            alpha,
            beta,
            mu,
        } = *self;
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParams(format!("omega={omega} must be in (0, inf)")));
        }
        if !(alpha >= 0.0 && beta >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "alpha={alpha}, beta={beta} must be non-negative"
            )));
        }
        if !(alpha + beta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "alpha + beta = {} must be below 1",
                alpha + beta
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParams("mu must be finite".into()));
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }
}

/// One (omega, alpha, beta) recursion of the diagonal VECH model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchTriple {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GarchTriple {
    pub const fn new(omega: f64, alpha: f64, beta: f64) -> Self {
        Self { omega, alpha, beta }
    }

    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta
    }

    /// `omega / (1 - alpha - beta)`.
    pub fn unconditional(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }

    /// One step of the recursion.
    #[inline]
    pub fn step(&self, shock_product: f64, previous: f64) -> f64 {
        self.omega + self.alpha * shock_product + self.beta * previous
    }
}

/// Diagonal VECH GARCH(1,1) for a cash/futures pair.
///
/// Fields are public so that aggregated parameter sets, which may leave the
/// estimable region (a negative aggregated beta, say), can be represented.
/// Filtering, estimation and simulation call [`VechGarchParams::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VechGarchParams {
    pub s: GarchTriple,
    pub sf: GarchTriple,
    pub f: GarchTriple,
    pub mu_s: f64,
    pub mu_f: f64,
}

/// Names of the natural parameter vector, in order.
pub const VECH_PARAM_NAMES: [&str; 11] = [
    "omega_s", "alpha_s", "beta_s", "omega_sf", "alpha_sf", "beta_sf", "omega_f", "alpha_f",
    "beta_f", "mu_s", "mu_f",
];

impl VechGarchParams {
    pub fn new(s: GarchTriple, sf: GarchTriple, f: GarchTriple, mu_s: f64, mu_f: f64) -> Result<Self> {
        let p = Self {
            s,
            sf,
            f,
            mu_s,
            mu_f,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("s", self.s), ("f", self.f)] {
            if !(t.omega > 0.0 && t.omega.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "omega_{name}={} must be in (0, inf)",
                    t.omega
                )));
            }
            if !(t.alpha >= 0.0 && t.beta >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "alpha_{name}={}, beta_{name}={} must be non-negative",
                    t.alpha, t.beta
                )));
            }
        }
        for (name, t) in [("s", self.s), ("sf", self.sf), ("f", self.f)] {
            if !(t.alpha + t.beta < 1.0) || !t.omega.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "equation {name}: alpha + beta = {} must be below 1",
                    t.alpha + t.beta
                )));
            }
            if !(t.beta.abs() < 1.0 && t.alpha.is_finite()) {
                return Err(Error::InvalidParams(format!("equation {name}: |beta| must be < 1")));
            }
        }
        if !(self.mu_s.is_finite() && self.mu_f.is_finite()) {
            return Err(Error::InvalidParams("means must be finite".into()));
        }
        Ok(())
    }

    /// Flattened in [`VECH_PARAM_NAMES`] order.
    pub fn to_vec(&self) -> [f64; 11] {
        [
            self.s.omega,
            self.s.alpha,
            self.s.beta,
            self.sf.omega,
            self.sf.alpha,
            self.sf.beta,
            self.f.omega,
            self.f.alpha,
            self.f.beta,
            self.mu_s,
            self.mu_f,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            s: GarchTriple::new(v[0], v[1], v[2]),
            sf: GarchTriple::new(v[3], v[4], v[5]),
            f: GarchTriple::new(v[6], v[7], v[8]),
            mu_s: v[9],
            mu_f: v[10],
        }
    }

    /// Implied unconditional correlation of the two legs.
    pub fn unconditional_correlation(&self) -> f64 {
        self.sf.unconditional() / (self.s.unconditional() * self.f.unconditional()).sqrt()
    }

    /// FTSE-like daily parameters: persistences and correlation of the
    /// published 1-day estimates, intercepts chosen to give 1.11% / 1.18%
    /// daily volatility and a 0.97 unconditional correlation.
    pub fn ftse_like() -> Self {
        let (sd_s, sd_f, rho) = (0.0111_f64, 0.0118_f64, 0.97_f64);
        let s = (0.0565, 0.9299);
        let sf = (0.0561, 0.9290);
        let f = (0.0570, 0.9272);
        let om = |var: f64, (a, b): (f64, f64)| var * (1.0 - a - b);
        Self {
            s: GarchTriple::new(om(sd_s * sd_s, s), s.0, s.1),
            sf: GarchTriple::new(om(rho * sd_s * sd_f, sf), sf.0, sf.1),
            f: GarchTriple::new(om(sd_f * sd_f, f), f.0, f.1),
            mu_s: 0.00009,
            mu_f: 0.00009,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_validation() {
        assert!(UniGarchParams::new(1e-5, 0.05, 0.9, 0.0).is_ok());
        assert!(UniGarchParams::new(0.0, 0.05, 0.9, 0.0).is_err());
        assert!(UniGarchParams::new(1e-5, -0.01, 0.9, 0.0).is_err());
        assert!(UniGarchParams::new(1e-5, 0.1, 0.9, 0.0).is_err());
    }

    #[test]
    fn vech_validation_and_roundtrip() {
        let p = VechGarchParams::ftse_like();
        p.validate().unwrap();
        assert_eq!(VechGarchParams::from_slice(&p.to_vec()), p);
        assert!((p.unconditional_correlation() - 0.97).abs() < 1e-12);
        assert!((p.s.persistence() - 0.9864).abs() < 1e-12);

        let mut bad = p;
        bad.f.alpha = 0.5;
        bad.f.beta = 0.5;
        assert!(bad.validate().is_err());
        let mut neg_cov = p;
        neg_cov.sf.omega = -1e-6;
        assert!(neg_cov.validate().is_ok());
    }
}
