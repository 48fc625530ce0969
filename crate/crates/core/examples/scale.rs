//! Square-root-of-time volatility scaling and weak-GARCH aggregation of daily
//! parameters to weekly and monthly horizons.
use hedgescale::garch::GarchTriple;
use hedgescale::scaling::{dn_aggregate, sqrt_scale_sd, DnInput};

fn main() -> hedgescale::Result<()> {
    let sd_daily = 1.11;
    for h in [5, 20] {
        println!("daily sd {sd_daily}% scales to {:.2}% at h={h}", sqrt_scale_sd(sd_daily, h));
    }

    let (alpha, beta) = (0.0565, 0.9299);
    let daily = GarchTriple::new(0.0111f64.powi(2) * (1.0 - alpha - beta), alpha, beta);
    for kappa in [3.0, 5.87] {
        for h in [5, 20] {
            let o = dn_aggregate(&DnInput { params: daily, kappa, h })?;
            println!(
                "kappa {kappa:.2} h={h:>2}: omega {:.3e} alpha {:.4} beta {:.4} persistence {:.4}",
                o.omega_h,
                o.alpha_h,
                o.beta_h,
                o.persistence()
            );
        }
    }
    Ok(())
}
