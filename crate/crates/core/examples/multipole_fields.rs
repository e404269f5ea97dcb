//! Dipole and quadrupole fields along a pass, by the harmonic and the
//! tensor routes, and the energy split over signal spaces.

use madkit::field::{signal_on_trajectory, subspace_energy_fractions, total_field, MultipoleSource, MultipoleTensor};
use madkit::harness::{scenario_s1, scenario_s2};
use nalgebra::Vector3;

fn main() -> madkit::Result<()> {
    let dipole = MultipoleSource::Tensor(MultipoleTensor::dipole([0.0, 0.0, 1.0])?);
    for z in [1.5, 3.0, 6.0] {
        let b = total_field(std::slice::from_ref(&dipole), &Vector3::new(0.0, 0.0, z))?;
        println!("axial dipole at z = {z}: B_z = {:.6}", b.z);
    }

    for sc in [scenario_s1(), scenario_s2()] {
        let geom = sc.geometry();
        let h = signal_on_trajectory(&sc.harmonic_source(), &geom)?;
        let t = signal_on_trajectory(&sc.tensor_source(), &geom)?;
        let corr = h.values().dot(t.values()) / (h.values().norm() * t.values().norm());
        let fractions = subspace_energy_fractions(&h, 3)?;
        println!(
            "{} (beta = {}): harmonic/tensor correlation 1 - {:.1e}, scale {:.4}, alpha_1..3 = {:.4?}",
            sc.name,
            sc.beta,
            1.0 - corr,
            h.values().norm() / t.values().norm(),
            fractions
        );
    }
    Ok(())
}
