//! GARCH(1,1) models: univariate and diagonal VECH filtering, likelihood,
//! estimation, forecasting and simulation.

mod estimate;
mod params;
mod univariate;
mod vech;

/// Draws discarded at the start of every simulation.
pub const BURN_IN: usize = 500;

pub use estimate::{
    default_vech_init, estimate, estimate_univariate, parse_kv, penalized_loglik, vech_from_estimates,
    EstimateOptions, EstimationResult, ParamEstimate,
};
pub use params::{GarchTriple, UniGarchParams, VechGarchParams, VECH_PARAM_NAMES};
pub use univariate::{filter_seeded, filter_univariate, loglik_univariate, simulate_univariate};
pub use vech::{
    filter_vech, filter_vech_seeded, forecast_ahead, forecast_one_step, loglik, loglik_gradient,
    loglik_seeded, loglik_unguarded, pd_guard, sample_correlation, simulate, simulate_returns,
    simulation_start, CovForecast, CovSeed, CovariancePath, DEFAULT_PENALTY_WEIGHT, PD_SHRINK,
};
