//! Variance, VaR and CVaR reductions of a hedge, per-block effectiveness and a
//! paired bootstrap test between two hedges.
use hedgescale::effectiveness::{block_effectiveness, bootstrap_diff_test, effectiveness, risk_measures, Measure};
use hedgescale::garch::{simulate, VechGarchParams};
use hedgescale::hedging::{hedged_portfolio, naive_hedge, ols_hedge, Timing};

fn main() -> hedgescale::Result<()> {
    let pair = simulate(&VechGarchParams::ftse_like(), 2500, 4)?;
    let unhedged = pair.cash().returns();
    let ols = hedged_portfolio(&pair, &ols_hedge(&pair)?, Timing::InSample)?;
    let naive = hedged_portfolio(&pair, &naive_hedge(pair.dates(), 1)?, Timing::InSample)?;

    let base = risk_measures(unhedged, 0.01)?;
    for (name, h) in [("ols", &ols), ("naive", &naive)] {
        let rm = risk_measures(&h.returns, 0.01)?;
        let e = effectiveness(&rm, &base)?;
        println!(
            "{name:<6} variance {:.3e} VaR {:.4} CVaR {:.4} | reduction {:.3} {:.3} {:.3}",
            rm.variance, rm.var_q, rm.cvar, e.variance, e.var, e.cvar
        );
    }

    let a = block_effectiveness(&ols.returns, unhedged, 50, 0.01)?;
    let b = block_effectiveness(&naive.returns, unhedged, 50, 0.01)?;
    for m in Measure::ALL {
        let t = bootstrap_diff_test(a.series(m), b.series(m), 2000, 7)?;
        println!(
            "{:<8} mean diff {:+.4} t {:+.2} significant {}",
            m.as_str(),
            t.mean_diff,
            t.t_stat,
            t.significant_5pct
        );
    }
    Ok(())
}
