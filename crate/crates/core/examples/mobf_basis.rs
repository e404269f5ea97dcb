//! Exact MOBF coefficients and sampled-basis orthonormality errors.

use madkit::field::TrajectoryGeometry;
use madkit::mobf::{mobf_eval, mobf_eval_gegenbauer, mobf_polynomial, orthonormality_error, sample_basis, BasisKind};

fn main() -> madkit::Result<()> {
    for n in 0..=2 {
        let p = mobf_polynomial(1, n)?;
        let (num, den) = p.c_squared();
        let monomials: Vec<String> = p.integer_monomials().iter().map(|m| m.to_string()).collect();
        println!("N = 1, n = {n}: c^2 = {num}/({den} pi), integer monomials [{}]", monomials.join(", "));
    }

    let u = 0.7;
    println!(
        "g_(3,4)({u}) expanded {:.15}, Gegenbauer {:.15}",
        mobf_eval(3, 4, u)?,
        mobf_eval_gegenbauer(3, 4, u)?
    );

    let geom = TrajectoryGeometry::pseudo_operational(0.0);
    println!("N  eps(G)      eps(F_gs)   eps(G_gs)");
    for order in 1..=5 {
        let eps = |kind| -> madkit::Result<f64> { Ok(orthonormality_error(sample_basis(order, &geom, kind)?.rows())) };
        println!(
            "{order}  {:.3e}   {:.1e}     {:.1e}",
            eps(BasisKind::Mobf)?,
            eps(BasisKind::RawOrthonormalized)?,
            eps(BasisKind::MobfReorthonormalized)?
        );
    }
    Ok(())
}
