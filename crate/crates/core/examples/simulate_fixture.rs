//! Writes GARCH and cointegrated price fixtures in the ingest format and reads
//! one back.
use hedgescale::data::{load_prices, Role};
use hedgescale::fixtures::{cointegrated_fixture, simulate_fixture, CointegratedSpec};
use hedgescale::garch::VechGarchParams;

fn main() -> hedgescale::Result<()> {
    let dir = std::env::temp_dir().join("hedgescale-fixtures");
    let g = simulate_fixture(&VechGarchParams::ftse_like(), 2601, 42, &dir, "garch")?;
    let c = cointegrated_fixture(&CointegratedSpec::default(), 2601, 42, &dir, "coint")?;
    for f in [&g.cash, &g.futures, &c.cash, &c.futures] {
        println!("wrote {}", f.display());
    }
    let prices = load_prices(&g.cash, "garch", Role::Cash)?;
    println!("{} prices from {} to {}", prices.len(), prices.dates()[0], prices.dates()[prices.len() - 1]);
    Ok(())
}
