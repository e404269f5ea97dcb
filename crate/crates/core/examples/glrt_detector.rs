//! One noisy pass through the GLRT energy detector, by the projection and
//! pseudo-inverse routes.

use madkit::detector::{
    decide, energy_statistic, energy_statistic_raw, estimate_coefficients, receiver_stats, NoiseModel, Receiver,
};
use madkit::field::signal_on_trajectory;
use madkit::harness::{sample_noise, scale_to_snr, scenario_s1, RngStream};
use madkit::mobf::{sample_basis, BasisKind};
use madkit::performance::threshold_for_pfa;

fn main() -> madkit::Result<()> {
    let sc = scenario_s1();
    let geom = sc.geometry();
    let s = scale_to_snr(&signal_on_trajectory(&sc.harmonic_source(), &geom)?, -18.0, 1.0)?;
    let noise = sample_noise(&NoiseModel::white(1.0)?, 3, geom.samples(), &mut RngStream::new(1).substream(1, 0))?;
    let x = s.values() + noise;

    for order in 1..=3 {
        let g = sample_basis(order, &geom, BasisKind::Mobf)?;
        let f = sample_basis(order, &geom, BasisKind::Raw)?;
        let rx = Receiver::from_basis(&g)?;
        let t = rx.statistic(&x)?;
        let t_raw = energy_statistic_raw(&estimate_coefficients(&x, &f)?, f.rows())?;
        let a = estimate_coefficients(&x, &g)?;
        let stats = receiver_stats(&s, &g, 1.0)?;
        let eta = threshold_for_pfa(stats.nu, 1e-2)?;
        println!(
            "M = {order}: T = {t:.3} (coefficients {:.3}, raw F {t_raw:.3}), nu = {}, lambda = {:.3}, eta = {eta:.3} -> {:?}, Pd = {:.4}",
            energy_statistic(&a),
            stats.nu,
            stats.lambda,
            decide(t, eta),
            stats.pd(1e-2)?
        );
    }
    Ok(())
}
