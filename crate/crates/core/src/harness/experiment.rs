use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::detector::{Factorization, NoiseModel, WhitenedReceiver};
use crate::error::{domain, Error, Result};
use crate::field::SampledSignal;
use crate::harness::noise::NoiseSampler;
use crate::harness::rng::{RngStream, TAG_NOISE_H0, TAG_NOISE_H1};
use crate::harness::scenarios::scale_to_snr;
use crate::mobf::{sample_basis, BasisKind};
use crate::order_selection::{select_from_energies, CriterionSpec};
use crate::performance::{log_grid, roc_for, RocCurve, RocPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceiverSpec {
    pub order: usize,
    pub kind: BasisKind,
}

/// A Monte Carlo ROC study on one noise-free signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub signal: SampledSignal,
    pub receivers: Vec<ReceiverSpec>,
    pub noise: NoiseModel,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub pfa_grid: Vec<f64>,
    pub seed: u64,
    pub factorization: Factorization,
}

/// 41 log-spaced points on `[1e-4, 1]`, excluding 1.
pub fn default_pfa_grid() -> Vec<f64> {
    let mut g = log_grid(1e-4, 1.0, 41);
    g.pop();
    g
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.receivers.is_empty() {
            return Err(Error::Config("at least one receiver is required".into()));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR list must be non-empty and finite".into()));
        }
        if self.pfa_grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::Config("pfa grid values must lie in (0, 1)".into()));
        }
        self.noise.validate()
    }
}

/// Average per-entry noise power, the SNR reference.
pub fn noise_power(model: &NoiseModel) -> f64 {
    match model {
        NoiseModel::White { variance } => *variance,
        NoiseModel::Kronecker { spatial, temporal } => {
            spatial.trace() * temporal.trace() / (spatial.nrows() * temporal.nrows()) as f64
        }
        NoiseModel::Full { covariance } => covariance.trace() / covariance.nrows() as f64,
    }
}

/// Empirical and analytic results for one (receiver, SNR) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentCurve {
    pub receiver: ReceiverSpec,
    pub snr_db: f64,
    pub nu: u32,
    pub lambda: f64,
    pub empirical: Vec<RocPoint>,
    pub analytic: RocCurve,
    pub auc_empirical: f64,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocExperiment {
    pub curves: Vec<ExperimentCurve>,
    pub trials: usize,
    pub seed: u64,
}

impl RocExperiment {
    pub fn curve(&self, order: usize, kind: BasisKind, snr_db: f64) -> Option<&ExperimentCurve> {
        self.curves
            .iter()
            .find(|c| c.receiver.order == order && c.receiver.kind == kind && (c.snr_db - snr_db).abs() < 1e-9)
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Rank-based empirical ROC: the threshold at nominal `pfa` is the
/// `floor(pfa n)`-th largest H0 statistic.
pub fn empirical_roc(h0: &[f64], h1: &[f64], pfa_grid: &[f64]) -> Result<Vec<RocPoint>> {
    if h0.is_empty() || h1.is_empty() {
        return Err(domain("empirical ROC needs samples under both hypotheses"));
    }
    let s0 = sorted(h0);
    let s1 = sorted(h1);
    let n0 = s0.len();
    let exceed = |s: &[f64], t: f64| (s.len() - s.partition_point(|v| *v <= t)) as f64 / s.len() as f64;
    let mut points = vec![RocPoint { pfa: 0.0, pd: 0.0, theta: f64::INFINITY }];
    let mut grid = pfa_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    for pfa in grid {
        let j = (pfa * n0 as f64).floor() as usize;
        let theta = if j < n0 { s0[n0 - 1 - j] } else { f64::NEG_INFINITY };
        points.push(RocPoint { pfa: exceed(&s0, theta), pd: exceed(&s1, theta), theta });
    }
    points.push(RocPoint { pfa: 1.0, pd: 1.0, theta: f64::NEG_INFINITY });
    Ok(points)
}

/// Mann–Whitney estimate of `P[h1 > h0] + P[h1 = h0] / 2`.
pub fn empirical_auc(h0: &[f64], h1: &[f64]) -> Result<f64> {
    if h0.is_empty() || h1.is_empty() {
        return Err(domain("empirical AUC needs samples under both hypotheses"));
    }
    let s0 = sorted(h0);
    let mut acc = 0.0;
    for &v in h1 {
        let below = s0.partition_point(|x| *x < v);
        let not_above = s0.partition_point(|x| *x <= v);
        acc += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(acc / (h0.len() as f64 * h1.len() as f64))
}

/// Kolmogorov–Smirnov distance between a sample and a continuous cdf.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let s = sorted(samples);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Monte Carlo plus analytic ROCs. Every receiver and SNR sees the same
/// noise draws: trial `t` uses substream `t` of the H0 and H1 tags.
pub fn run_roc_experiment(cfg: &ExperimentConfig) -> Result<RocExperiment> {
    cfg.validate()?;
    let geom = cfg.signal.geometry();
    let (d, k) = cfg.signal.values().shape();
    let receivers = cfg
        .receivers
        .iter()
        .map(|r| WhitenedReceiver::new(&sample_basis(r.order, geom, r.kind)?, &cfg.noise, d, cfg.factorization))
        .collect::<Result<Vec<_>>>()?;
    let power = noise_power(&cfg.noise);
    let unit = scale_to_snr(&cfg.signal, 0.0, power)?;
    let projected: Vec<DVector<f64>> = receivers.iter().map(|r| r.project(unit.values())).collect::<Result<_>>()?;
    let gains: Vec<f64> = cfg.snr_db.iter().map(|s| 10f64.powf(s / 20.0)).collect();
    let sampler = NoiseSampler::new(&cfg.noise, d, k)?;
    let stream = RngStream::new(cfg.seed);

    // Per trial: H0 statistic per receiver, then H1 statistic per (receiver, snr).
    let per_trial: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let n0 = sampler.sample(&mut stream.substream(TAG_NOISE_H0, t as u64));
            let n1 = sampler.sample(&mut stream.substream(TAG_NOISE_H1, t as u64));
            let mut h0 = Vec::with_capacity(receivers.len());
            let mut h1 = Vec::with_capacity(receivers.len() * gains.len());
            for (rx, ps) in receivers.iter().zip(&projected) {
                h0.push(rx.project(&n0).expect("shape checked").norm_squared());
                let p1 = rx.project(&n1).expect("shape checked");
                for g in &gains {
                    h1.push(p1.zip_fold(ps, 0.0, |acc, a, b| {
                        let v = a + g * b;
                        acc + v * v
                    }));
                }
            }
            (h0, h1)
        })
        .collect();

    let mut curves = Vec::with_capacity(receivers.len() * gains.len());
    for (ri, rx) in receivers.iter().enumerate() {
        let h0: Vec<f64> = per_trial.iter().map(|t| t.0[ri]).collect();
        for (si, (&snr, g)) in cfg.snr_db.iter().zip(&gains).enumerate() {
            let h1: Vec<f64> = per_trial.iter().map(|t| t.1[ri * gains.len() + si]).collect();
            let lambda = g * g * projected[ri].norm_squared();
            curves.push(ExperimentCurve {
                receiver: cfg.receivers[ri],
                snr_db: snr,
                nu: rx.dof(),
                lambda,
                empirical: empirical_roc(&h0, &h1, &cfg.pfa_grid)?,
                analytic: roc_for(rx.dof(), lambda, &cfg.pfa_grid)?,
                auc_empirical: empirical_auc(&h0, &h1)?,
                h0: h0.clone(),
                h1,
            });
        }
    }
    Ok(RocExperiment { curves, trials: cfg.trials, seed: cfg.seed })
}

/// Monte Carlo order selection under both hypotheses, white noise.
#[derive(Debug, Clone)]
pub struct SelectionConfig {
    pub signal: SampledSignal,
    pub variance: f64,
    pub snr_db: f64,
    pub trials: usize,
    pub seed: u64,
    pub criteria: Vec<CriterionSpec>,
    pub kind: BasisKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionFrequency {
    pub criterion: String,
    pub hypothesis: u8,
    pub order: usize,
    pub count: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// `selected[t][2 c + k]`: order chosen by criterion `c` under `H_k` at trial `t`.
    pub selected: Vec<Vec<usize>>,
    pub histogram: Vec<SelectionFrequency>,
    pub criteria: Vec<String>,
    pub max_order: usize,
    pub trials: usize,
}

impl SelectionOutcome {
    pub fn frequency(&self, criterion: &str, hypothesis: u8, order: usize) -> Option<f64> {
        self.histogram
            .iter()
            .find(|h| h.criterion == criterion && h.hypothesis == hypothesis && h.order == order)
            .map(|h| h.frequency)
    }
}

pub fn run_selection_experiment(cfg: &SelectionConfig) -> Result<SelectionOutcome> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if cfg.criteria.is_empty() {
        return Err(Error::Config("at least one criterion is required".into()));
    }
    let max_order = cfg.criteria.iter().map(|c| c.max_order).max().unwrap_or(1);
    if max_order == 0 {
        return Err(Error::Config("criterion max order must be at least 1".into()));
    }
    let geom = cfg.signal.geometry();
    let (d, k) = cfg.signal.values().shape();
    let noise = NoiseModel::white(cfg.variance)?;
    let receivers = (1..=max_order)
        .map(|m| WhitenedReceiver::new(&sample_basis(m, geom, cfg.kind)?, &noise, d, Factorization::Cholesky))
        .collect::<Result<Vec<_>>>()?;
    let s = scale_to_snr(&cfg.signal, cfg.snr_db, cfg.variance)?;
    let projected: Vec<DVector<f64>> = receivers.iter().map(|r| r.project(s.values())).collect::<Result<_>>()?;
    let sampler = NoiseSampler::new(&noise, d, k)?;
    let stream = RngStream::new(cfg.seed);
    let selected: Vec<Vec<usize>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let n0: DMatrix<f64> = sampler.sample(&mut stream.substream(TAG_NOISE_H0, t as u64));
            let n1: DMatrix<f64> = sampler.sample(&mut stream.substream(TAG_NOISE_H1, t as u64));
            let e0: Vec<f64> = receivers.iter().map(|r| r.statistic(&n0).expect("shape checked")).collect();
            let e1: Vec<f64> = receivers
                .iter()
                .zip(&projected)
                .map(|(r, ps)| (r.project(&n1).expect("shape checked") + ps).norm_squared())
                .collect();
            cfg.criteria
                .iter()
                .flat_map(|c| [select_from_energies(&e0, c, 1.0), select_from_energies(&e1, c, 1.0)])
                .collect()
        })
        .collect();
    let mut histogram = Vec::new();
    for (ci, c) in cfg.criteria.iter().enumerate() {
        for hyp in 0..2u8 {
            for order in 1..=max_order {
                let count = selected.iter().filter(|row| row[2 * ci + hyp as usize] == order).count();
                histogram.push(SelectionFrequency {
                    criterion: c.name.clone(),
                    hypothesis: hyp,
                    order,
                    count,
                    frequency: count as f64 / cfg.trials as f64,
                });
            }
        }
    }
    Ok(SelectionOutcome {
        selected,
        histogram,
        criteria: cfg.criteria.iter().map(|c| c.name.clone()).collect(),
        max_order,
        trials: cfg.trials,
    })
}
