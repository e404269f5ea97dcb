//! Kronecker-structured noise: whitening by Cholesky and by eigen
//! factorization, and the whitened statistic's null law.

use madkit::detector::{whiten, Factorization, NoiseModel, WhitenedReceiver};
use madkit::harness::{ar1_covariance, ks_distance, NoiseSampler, RngStream};
use madkit::field::TrajectoryGeometry;
use madkit::mobf::{sample_basis, BasisKind};
use madkit::performance::ChiSquared;
use nalgebra::DMatrix;

fn main() -> madkit::Result<()> {
    let geom = TrajectoryGeometry::pseudo_operational(0.3).with_grid(201, 20.0)?;
    let spatial = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.1, 0.4, 2.0, 0.3, 0.1, 0.3, 0.5]);
    let model = NoiseModel::Kronecker { spatial, temporal: ar1_covariance(geom.samples(), 0.8, 1.0) };
    let basis = sample_basis(2, &geom, BasisKind::Mobf)?;
    let sampler = NoiseSampler::new(&model, 3, geom.samples())?;
    let stream = RngStream::new(4);

    let x = sampler.sample(&mut stream.substream(1, 0));
    let chol = whiten(&x, &model, basis.rows(), Factorization::Cholesky)?.statistic()?;
    let eig = whiten(&x, &model, basis.rows(), Factorization::Eigen)?.statistic()?;
    println!("one draw: Cholesky {chol:.10}, eigen {eig:.10}");

    let rx = WhitenedReceiver::new(&basis, &model, 3, Factorization::Cholesky)?;
    let stats: Vec<f64> = (0..5000)
        .map(|t| rx.statistic(&sampler.sample(&mut stream.substream(1, t))))
        .collect::<madkit::Result<_>>()?;
    let law = ChiSquared::central(rx.dof())?;
    let ks = ks_distance(&stats, |v| law.cdf(v).unwrap_or(f64::NAN));
    println!("whitened null statistic vs chi^2_{}: KS distance {ks:.4} over {} draws", rx.dof(), stats.len());
    Ok(())
}
