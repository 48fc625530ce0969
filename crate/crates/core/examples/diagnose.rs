//! Descriptive statistics, normality, ARCH and stationarity tests, and the
//! cash/futures correlation at three horizons of a simulated pair.
use hedgescale::diagnostics::{battery, correlation};
use hedgescale::garch::{simulate, VechGarchParams};

fn main() -> hedgescale::Result<()> {
    let daily = simulate(&VechGarchParams::ftse_like(), 2600, 1)?;
    for h in [1, 5, 20] {
        let pair = daily.aggregate(h)?;
        let d = battery(pair.cash().returns())?;
        println!(
            "h={h:>2} n={:>4} sd={:.2}% excess kurtosis={:.2} JB={:.1} LM={:.1} KPSS={:.3} corr={:.3}",
            d.moments.n,
            d.moments.sd_pct,
            d.moments.excess_kurtosis.unwrap_or(f64::NAN),
            d.jarque_bera.statistic,
            d.lm.statistic,
            d.kpss_constant.statistic,
            correlation(&pair)?,
        );
    }
    Ok(())
}
