//! Multi-horizon futures hedging: diagonal VECH GARCH estimation, horizon
//! scaling of volatility parameters, hedge-ratio construction and
//! variance/VaR/CVaR hedging effectiveness with bootstrap comparisons.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod diagnostics;
pub mod effectiveness;
pub mod error;
pub mod fixtures;
pub mod garch;
pub mod hedging;
pub mod linalg;
pub mod optim;
pub mod pipeline;
pub mod scaling;
pub mod stats;

pub use error::{Error, Result};
