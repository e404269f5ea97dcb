use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::detector::NoiseModel;
use crate::error::{shape, Error, Result};

fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn lower_factor(m: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::NotPositiveDefinite(format!("{name} has no Cholesky factor")))
}

/// Precomputed square-root factors of a noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSampler {
    d: usize,
    samples: usize,
    kind: SamplerKind,
}

#[derive(Debug, Clone, PartialEq)]
enum SamplerKind {
    White { sigma: f64 },
    Kronecker { ls: DMatrix<f64>, lt: DMatrix<f64> },
    Full { l: DMatrix<f64> },
}

impl NoiseSampler {
    pub fn new(model: &NoiseModel, d: usize, samples: usize) -> Result<Self> {
        model.validate()?;
        model.check_shape(d, samples)?;
        let kind = match model {
            NoiseModel::White { variance } => SamplerKind::White { sigma: variance.sqrt() },
            NoiseModel::Kronecker { spatial, temporal } => SamplerKind::Kronecker {
                ls: lower_factor(spatial, "spatial covariance")?,
                lt: lower_factor(temporal, "temporal covariance")?,
            },
            NoiseModel::Full { covariance } => SamplerKind::Full { l: lower_factor(covariance, "covariance")? },
        };
        Ok(Self { d, samples, kind })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let (d, k) = (self.d, self.samples);
        match &self.kind {
            SamplerKind::White { sigma } => standard_normal(d, k, rng) * *sigma,
            SamplerKind::Kronecker { ls, lt } => ls * standard_normal(d, k, rng) * lt.transpose(),
            SamplerKind::Full { l } => {
                let z = DVector::from_fn(d * k, |_, _| rng.sample::<f64, _>(StandardNormal));
                let v = l * z;
                // Row-stacked vector back to d x K.
                DMatrix::from_row_slice(d, k, v.as_slice())
            }
        }
    }
}

/// One `d x K` noise draw.
pub fn sample_noise<R: Rng + ?Sized>(model: &NoiseModel, d: usize, samples: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if d == 0 || samples == 0 {
        return Err(shape("noise dimensions must be positive"));
    }
    Ok(NoiseSampler::new(model, d, samples)?.sample(rng))
}

/// AR(1) correlation matrix `rho^|i-j|`.
pub fn ar1_covariance(samples: usize, rho: f64, variance: f64) -> DMatrix<f64> {
    DMatrix::from_fn(samples, samples, |i, j| variance * rho.powi((i as i64 - j as i64).unsigned_abs() as i32))
}
