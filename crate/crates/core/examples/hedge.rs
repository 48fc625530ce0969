//! Constant (OLS), time-varying GARCH, one-step forecast and scaled hedge
//! ratios on a simulated pair split into estimation and holdout samples.
use hedgescale::data::split;
use hedgescale::garch::{estimate, filter_vech, simulate, EstimateOptions, VechGarchParams};
use hedgescale::hedging::{forecast_hedge, garch_hedge, ols_hedge, scaled_hedge, HedgePath};

fn show(p: &HedgePath) {
    let s = p.summary();
    println!("{:<14} n={:>4} mean {:.3} sd {:.3} min {:.3} max {:.3}", p.id(), s.n, s.mean, s.sd, s.min, s.max);
}

fn main() -> hedgescale::Result<()> {
    let daily = simulate(&VechGarchParams::ftse_like(), 3000, 3)?;
    let cut = daily.dates()[2400];
    let s = split(&daily, cut)?;

    let fit = estimate(&s.estimation, None, &EstimateOptions::default())?;
    let ols = ols_hedge(&s.estimation)?;
    let garch = garch_hedge(&filter_vech(&s.estimation, &fit.params)?, 1)?;
    let forecast = forecast_hedge(&s.estimation, &s.holdout, &fit.params)?;
    show(&ols);
    show(&garch);
    show(&forecast);

    let weekly = s.estimation.aggregate(5)?;
    show(&scaled_hedge(&garch, weekly.dates(), 5)?);
    Ok(())
}
