//! Analytic ROC curves and AUCs of the energy detector.

use madkit::performance::{auc, detection_probability, log_grid, roc_for, snr_ratio};

fn main() -> madkit::Result<()> {
    let lambda = 3003.0 * 10f64.powf(-2.2);
    for order in 1..=4u32 {
        let nu = 3 * (2 * order + 1);
        let curve = roc_for(nu, lambda, &log_grid(1e-3, 0.5, 6))?;
        let pts: Vec<String> = curve.points.iter().map(|p| format!("({:.3}, {:.3})", p.pfa, p.pd)).collect();
        println!("nu = {nu:2}, lambda = {lambda:.2}: AUC {:.4}, ROC {}", curve.auc, pts.join(" "));
    }
    println!("AUC of nu = 27 from -25 to -20 dB:");
    for snr in -25..=-20 {
        let l = 3003.0 * 10f64.powf(snr as f64 / 10.0);
        println!("  {snr} dB: {:.2} %, Pd(1e-2) = {:.4}", 100.0 * auc(27, l)?, detection_probability(27, l, 1e-2)?);
    }
    println!("SNR ratio of a pure quadrupole at alpha_2 = 0.747: {:.4}", snr_ratio(2, 0.747)?);
    Ok(())
}
