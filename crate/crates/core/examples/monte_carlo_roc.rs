//! Seeded Monte Carlo ROC experiment from a scenario file, compared with
//! the analytic curves.

use std::path::Path;

use madkit::harness::{run_roc_experiment, ScenarioConfig};
use madkit::performance::ChiSquared;

fn main() -> madkit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/s1.toml");
    let cfg = ScenarioConfig::load(&path)?.experiment_config(None, Some(5_000))?;
    let out = run_roc_experiment(&cfg)?;
    for c in &out.curves {
        // Analytic Pd at each empirical threshold, in binomial standard errors.
        let law = ChiSquared::new(c.nu, c.lambda)?;
        let n = c.h1.len() as f64;
        let mut worst = 0.0f64;
        for e in c.empirical.iter().filter(|e| e.theta.is_finite()) {
            let pd = law.ccdf(e.theta)?;
            let se = (pd * (1.0 - pd) / n).sqrt().max(1.0 / n);
            worst = worst.max((e.pd - pd).abs() / se);
        }
        println!(
            "M = {} {:>4} at {} dB: AUC analytic {:.4}, empirical {:.4}, worst Pd deviation {worst:.2} se",
            c.receiver.order,
            c.receiver.kind.label(),
            c.snr_db,
            c.analytic.auc,
            c.auc_empirical
        );
    }
    Ok(())
}
