//! AIC and BIC receiver-order selection: binary model against simulation,
//! and the selected-order receiver's operating point.

use madkit::field::signal_on_trajectory;
use madkit::harness::{run_selection_experiment, scale_to_snr, scenario_s1, SelectionConfig};
use madkit::mobf::{sample_basis, BasisKind};
use madkit::order_selection::{
    selected_order_performance, selection_probability, BinaryChoiceModel, CriterionSpec, SelectedOrderParams,
    Threshold,
};

fn main() -> madkit::Result<()> {
    let sc = scenario_s1();
    let geom = sc.geometry();
    let signal = signal_on_trajectory(&sc.harmonic_source(), &geom)?;
    let s = scale_to_snr(&signal, -22.0, 1.0)?;
    let lambda: Vec<f64> = (1..=2)
        .map(|m| Ok((s.values() * sample_basis(m, &geom, BasisKind::RawOrthonormalized)?.rows().transpose()).norm_squared()))
        .collect::<madkit::Result<_>>()?;
    let criteria = vec![CriterionSpec::aic(3, 2), CriterionSpec::bic(3, 1001, 2)];
    let out = run_selection_experiment(&SelectionConfig {
        signal,
        variance: 1.0,
        snr_db: -22.0,
        trials: 20_000,
        seed: 1,
        criteria: criteria.clone(),
        kind: BasisKind::RawOrthonormalized,
    })?;
    for spec in &criteria {
        let model = BinaryChoiceModel::new(2, 1, 3, spec, lambda[1], lambda[0])?;
        for k in 0..2u8 {
            println!(
                "{} H{k}: Pr[M = 2] model {:.4}, simulated {:.4}",
                spec.name,
                selection_probability(&model, k)?,
                out.frequency(&spec.name, k, 2).unwrap_or(f64::NAN)
            );
        }
        println!("{} lower-order weight {:.4}", spec.name, model.lower_order_weight()?);
        let alpha = lambda[0] / lambda[1];
        let p = SelectedOrderParams::from_spec(2, 1, 3, alpha, lambda[1], spec)?;
        let op = selected_order_performance(&p, Threshold::Pfa(1e-2))?;
        println!("{} selected-order receiver at pfa 1e-2: Pd = {:.4} (theta = {:.3})", spec.name, op.pd, op.theta);
    }
    Ok(())
}
