//! Least squares and symmetric-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
}

/// Regresses `y` on the columns of `x` (row-major, one row per observation).
///
/// Fails with `SingularRegression` when `y` has no variation or the design is
/// rank deficient.
pub fn ols(y: &[f64], x: &DMatrix<f64>) -> Result<OlsFit> {
    let n = y.len();
    if x.nrows() != n || n <= x.ncols() {
        return Err(Error::SingularRegression(format!(
            "{} observations for {} regressors",
            n,
            x.ncols()
        )));
    }
    let yv = DVector::from_column_slice(y);
    let ybar = yv.mean();
    let tss: f64 = yv.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    if !(tss > 0.0) {
        return Err(Error::SingularRegression(
            "dependent variable is constant".into(),
        ));
    }
    let xtx = x.transpose() * x;
    let xty = x.transpose() * &yv;
    let chol = xtx
        .cholesky()
        .ok_or_else(|| Error::SingularRegression("X'X is not positive definite".into()))?;
    let beta = chol.solve(&xty);
    let resid = &yv - x * &beta;
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        residuals: resid.iter().copied().collect(),
        r_squared: 1.0 - rss / tss,
    })
}

/// Inverse of a symmetric positive-definite matrix, `None` when it is not PD.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    sym.cholesky().map(|c| c.inverse())
}
