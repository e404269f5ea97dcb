use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};
use crate::field::{HarmonicCoefficients, MultipoleSource, MultipoleTensor, SampledSignal, TrajectoryGeometry};
use crate::harness::rng::{RngStream, TAG_SOURCES};

/// Quadrupole scenarios with both parameterizations of the same source.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupoleScenario {
    pub name: &'static str,
    pub beta: f64,
    pub harmonic: HarmonicCoefficients,
    pub tensor: MultipoleTensor,
}

impl QuadrupoleScenario {
    pub fn geometry(&self) -> TrajectoryGeometry {
        TrajectoryGeometry::pseudo_operational(self.beta)
    }

    pub fn harmonic_source(&self) -> Vec<MultipoleSource> {
        vec![MultipoleSource::Harmonic(self.harmonic.clone())]
    }

    pub fn tensor_source(&self) -> Vec<MultipoleSource> {
        vec![MultipoleSource::Tensor(self.tensor.clone())]
    }
}

/// Scenario with a dominant dipolar energy share near 0.75.
pub fn scenario_s1() -> QuadrupoleScenario {
    QuadrupoleScenario {
        name: "S1",
        beta: -0.95,
        harmonic: HarmonicCoefficients::new(2, vec![-571.20, 109.49, 187.38], vec![191.18, -86.35]).expect("valid"),
        tensor: MultipoleTensor::quadrupole([
            [44.9740, -13.7430, 8.7129],
            [-13.7430, -14.6709, 15.2136],
            [8.7129, 15.2136, -30.3031],
        ])
        .expect("valid"),
    }
}

/// Scenario with a dipolar energy share near 0.94.
pub fn scenario_s2() -> QuadrupoleScenario {
    QuadrupoleScenario {
        name: "S2",
        beta: -0.57,
        harmonic: HarmonicCoefficients::new(2, vec![-40.99, 154.05, -17.96], vec![-148.79, 15.63]).expect("valid"),
        tensor: MultipoleTensor::quadrupole([
            [-1.7706, 2.4873, 12.2588],
            [2.4873, 3.9452, -11.8404],
            [12.2588, -11.8404, -2.1746],
        ])
        .expect("valid"),
    }
}

pub fn scenario_by_name(name: &str) -> Option<QuadrupoleScenario> {
    match name.to_ascii_lowercase().as_str() {
        "s1" => Some(scenario_s1()),
        "s2" => Some(scenario_s2()),
        _ => None,
    }
}

/// Random multipolar source through order `L` and a random pass angle.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomScenario {
    pub sources: Vec<MultipoleSource>,
    pub beta: f64,
}

impl RandomScenario {
    pub fn coefficient_count(&self) -> usize {
        self.sources
            .iter()
            .map(|s| match s {
                MultipoleSource::Harmonic(h) => 2 * h.order() + 1,
                MultipoleSource::Tensor(t) => t.components().len(),
            })
            .sum()
    }
}

/// Standard-normal `a_lm`, `b_lm` for `l = 1..=L` and `beta ~ U[-pi/2, pi/2]`;
/// scenario `i` uses substream `i`.
pub fn run_random_source_batch(order: usize, count: usize, stream: &RngStream) -> Result<Vec<RandomScenario>> {
    if order == 0 {
        return Err(domain("source order must be at least 1"));
    }
    (0..count)
        .map(|i| {
            let mut rng = stream.substream(TAG_SOURCES, i as u64);
            let mut sources = Vec::with_capacity(order);
            for l in 1..=order {
                let a = (0..=l).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let b = (0..l).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                sources.push(MultipoleSource::Harmonic(HarmonicCoefficients::new(l, a, b)?));
            }
            let beta = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
            Ok(RandomScenario { sources, beta })
        })
        .collect()
}

/// `c s` with `||c s||_F^2 = d K sigma^2 10^(snr/10)`.
pub fn scale_to_snr(s: &SampledSignal, snr_db: f64, variance: f64) -> Result<SampledSignal> {
    if !snr_db.is_finite() {
        return Err(domain("SNR must be finite"));
    }
    if !(variance > 0.0) {
        return Err(domain("noise variance must be positive"));
    }
    let energy = s.energy();
    if !(energy > 0.0) {
        return Err(domain("cannot scale a zero signal to an SNR"));
    }
    let (d, k) = s.values().shape();
    let target = (d * k) as f64 * variance * 10f64.powf(snr_db / 10.0);
    Ok(s.scaled((target / energy).sqrt()))
}

/// `10 log10(||s||^2 / (d K sigma^2))`.
pub fn snr_db_of(s: &SampledSignal, variance: f64) -> f64 {
    let (d, k) = s.values().shape();
    10.0 * (s.energy() / ((d * k) as f64 * variance)).log10()
}
