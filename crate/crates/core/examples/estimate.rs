//! Fits the diagonal VECH GARCH(1,1) to simulated data and compares the
//! estimates with the true parameters.
use hedgescale::garch::{estimate, simulate, EstimateOptions, VechGarchParams, VECH_PARAM_NAMES};

fn main() -> hedgescale::Result<()> {
    let truth = VechGarchParams::ftse_like();
    let pair = simulate(&truth, 10_000, 2)?;
    let fit = estimate(&pair, None, &EstimateOptions::default())?;
    println!("converged: {} after {} iterations", fit.converged, fit.iterations);
    println!("{:<8} {:>12} {:>12} {:>10} {:>10}", "param", "true", "estimate", "se", "robust");
    for (name, t) in VECH_PARAM_NAMES.iter().zip(truth.to_vec()) {
        if let Some(e) = fit.get(name) {
            println!("{name:<8} {t:>12.4e} {:>12.4e} {:>10.2e} {:>10.2e}", e.estimate, e.se, e.robust_se);
        }
    }
    println!("persistence cash {:.4}, futures {:.4}", fit.params.s.persistence(), fit.params.f.persistence());
    Ok(())
}
