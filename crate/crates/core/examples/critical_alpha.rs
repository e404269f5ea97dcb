//! Critical energy fractions against SNR and the order-3 optimal-order map.

use madkit::order_selection::{average_critical_alpha, criterion_critical_alpha, CriterionSpec};
use madkit::performance::{critical_alpha, optimal_order_map, ZoneParams};

fn main() -> madkit::Result<()> {
    let (d, k) = (3, 1001);
    let aic = CriterionSpec::aic(d, 2);
    let bic = CriterionSpec::bic(d, k, 2);
    println!("SNR    alpha_c(1e-2)  alpha_c,AIC  alpha_bar,AIC  alpha_c,BIC");
    for snr in (-26..=-14).step_by(2) {
        let lambda = (d * k) as f64 * 10f64.powf(snr as f64 / 10.0);
        let show = |v: Option<f64>| v.map_or("none".to_string(), |a| format!("{a:.4}"));
        println!(
            "{snr:4}   {:.4}         {:>6}       {:.4}         {:>6}",
            critical_alpha(2, d, 1e-2, lambda)?,
            show(criterion_critical_alpha(2, d, lambda, &aic)?),
            average_critical_alpha(2, d, lambda, &aic)?,
            show(criterion_critical_alpha(2, d, lambda, &bic)?)
        );
    }

    for snr in [-22.0, -16.0] {
        let map = optimal_order_map(&ZoneParams { pfa: 1e-2, lambda3: 3003.0 * 10f64.powf(snr / 10.0), d, resolution: 41 })?;
        println!(
            "zones at {snr} dB: area(1) = {:.3}, area(2) = {:.3}, area(3) = {:.3}",
            map.area(1),
            map.area(2),
            map.area(3)
        );
    }
    Ok(())
}
