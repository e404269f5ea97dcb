//! Information-criterion receiver-order selection.
//!
//! `C(M) = ||A_M||_F^2 / sigma^2 - c(M)` and `M_c = argmax C(M)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::detector::ReceiverBank;
use crate::error::{domain, Error, Result};
use crate::performance::{dof, ChiSquared};
use crate::quad::integrate;

const ALPHA_TOL: f64 = 1e-6;
const QUAD_TOL: f64 = 1e-10;

/// Penalty `c(M)`.
#[derive(Clone)]
pub enum Penalty {
    /// `4 d M`.
    Aic { d: usize },
    /// `2 d M ln(d K)`.
    Bic { d: usize, samples: usize },
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Aic { d } => write!(f, "Aic {{ d: {d} }}"),
            Penalty::Bic { d, samples } => write!(f, "Bic {{ d: {d}, samples: {samples} }}"),
            Penalty::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Penalty {
    pub fn eval(&self, order: usize) -> f64 {
        let m = order as f64;
        match self {
            Penalty::Aic { d } => 4.0 * *d as f64 * m,
            Penalty::Bic { d, samples } => 2.0 * *d as f64 * m * ((*d * *samples) as f64).ln(),
            Penalty::Custom(f) => f(order),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionSpec {
    pub name: String,
    pub penalty: Penalty,
    pub max_order: usize,
}

impl CriterionSpec {
    pub fn aic(d: usize, max_order: usize) -> Self {
        Self { name: "AIC".into(), penalty: Penalty::Aic { d }, max_order }
    }

    pub fn bic(d: usize, samples: usize, max_order: usize) -> Self {
        Self { name: "BIC".into(), penalty: Penalty::Bic { d, samples }, max_order }
    }

    /// Preset by name (`aic` or `bic`, case-insensitive).
    pub fn preset(name: &str, d: usize, samples: usize, max_order: usize) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "aic" => Ok(Self::aic(d, max_order)),
            "bic" | "mdl" => Ok(Self::bic(d, samples, max_order)),
            other => Err(Error::Config(format!("unknown criterion {other:?} (expected aic or bic)"))),
        }
    }

    pub fn penalty(&self, order: usize) -> f64 {
        self.penalty.eval(order)
    }

    /// `delta_c(M, m) = c(M) - c(M - m)`.
    pub fn delta_c(&self, order: usize, m: usize) -> Result<f64> {
        if m == 0 || m > order {
            return Err(domain(format!("need 0 < m <= M, got M = {order}, m = {m}")));
        }
        let dc = self.penalty(order) - self.penalty(order - m);
        if !(dc > 0.0) {
            return Err(Error::Config(format!("penalty of {} is not strictly increasing", self.name)));
        }
        Ok(dc)
    }
}

/// `C(M)` from a precomputed unnormalized energy.
pub fn criterion_from_energy(energy: f64, order: usize, spec: &CriterionSpec, variance: f64) -> f64 {
    energy / variance - spec.penalty(order)
}

/// `C(M) = ||x T_M||^2 / sigma^2 - c(M)`.
pub fn criterion_value(x: &DMatrix<f64>, order: usize, spec: &CriterionSpec, variance: f64, bank: &ReceiverBank) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(domain("noise variance must be positive"));
    }
    let rx = bank
        .receiver(order)
        .ok_or_else(|| domain(format!("no receiver of order {order} (bank holds 1..={})", bank.max_order())))?;
    Ok(criterion_from_energy(rx.statistic(x)?, order, spec, variance))
}

/// `argmax_M C(M)` over energies for orders `1..`, ties to the smaller order.
pub fn select_from_energies(energies: &[f64], spec: &CriterionSpec, variance: f64) -> usize {
    let top = spec.max_order.min(energies.len()).max(1);
    let mut best = (1, f64::NEG_INFINITY);
    for (i, e) in energies.iter().take(top).enumerate() {
        let c = criterion_from_energy(*e, i + 1, spec, variance);
        if c > best.1 {
            best = (i + 1, c);
        }
    }
    best.0
}

pub fn select_order(x: &DMatrix<f64>, spec: &CriterionSpec, variance: f64, bank: &ReceiverBank) -> Result<usize> {
    if spec.max_order == 0 {
        return Err(domain("maximum order must be at least 1"));
    }
    if bank.max_order() < spec.max_order {
        return Err(domain(format!("bank holds orders up to {}, criterion needs {}", bank.max_order(), spec.max_order)));
    }
    if !(variance > 0.0) {
        return Err(domain("noise variance must be positive"));
    }
    let energies = bank.statistics(x)?;
    Ok(select_from_energies(&energies, spec, variance))
}

/// Choice between orders `M - m` and `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryChoiceModel {
    pub order: usize,
    pub m: usize,
    pub delta_c: f64,
    pub delta_lambda: f64,
    pub dofs: u32,
}

impl BinaryChoiceModel {
    pub fn new(order: usize, m: usize, d: usize, spec: &CriterionSpec, lambda_hi: f64, lambda_lo: f64) -> Result<Self> {
        let delta_c = spec.delta_c(order, m)?;
        let delta_lambda = lambda_hi - lambda_lo;
        if !(delta_lambda >= 0.0) {
            return Err(domain(format!("lambda_M must not be below lambda_(M-m) (difference {delta_lambda})")));
        }
        Ok(Self { order, m, delta_c, delta_lambda, dofs: (2 * d * m) as u32 })
    }

    fn law(&self, k: u8) -> Result<ChiSquared> {
        ChiSquared::new(self.dofs, if k == 0 { 0.0 } else { self.delta_lambda })
    }

    /// `F_(chi^2_(2dm)(delta_lambda))(delta_c)`, the weight of the lower order.
    pub fn lower_order_weight(&self) -> Result<f64> {
        self.law(1)?.cdf(self.delta_c)
    }
}

/// `Pr[M_c = M | H_k] = Qbar_(chi^2_(2dm)(k delta_lambda))(delta_c)`.
pub fn selection_probability(model: &BinaryChoiceModel, k: u8) -> Result<f64> {
    if k > 1 {
        return Err(domain("hypothesis index must be 0 or 1"));
    }
    model.law(k)?.ccdf(model.delta_c)
}

/// Median condition `Qbar_(chi^2_(2d)((1-alpha) lambda_N))(delta_c(N,1)) = 1/2`
/// solved for `alpha`; `None` when there is no root in `[0, 1]`.
pub fn criterion_critical_alpha(order: usize, d: usize, lambda_n: f64, spec: &CriterionSpec) -> Result<Option<f64>> {
    if !(lambda_n > 0.0) {
        return Err(domain("lambda_N must be positive"));
    }
    let dc = spec.delta_c(order, 1)?;
    let nu = (2 * d) as u32;
    let h = |alpha: f64| -> Result<f64> { Ok(ChiSquared::new(nu, (1.0 - alpha) * lambda_n)?.ccdf(dc)? - 0.5) };
    let (h0, h1) = (h(0.0)?, h(1.0)?);
    if h1 > 0.0 || h0 < 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > ALPHA_TOL {
        let mid = 0.5 * (lo + hi);
        if h(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// `max(0, 1 - (delta_c(N,1) - 2d) / lambda_N)`.
pub fn average_critical_alpha(order: usize, d: usize, lambda_n: f64, spec: &CriterionSpec) -> Result<f64> {
    if !(lambda_n > 0.0) {
        return Err(domain("lambda_N must be positive"));
    }
    let dc = spec.delta_c(order, 1)?;
    Ok((1.0 - (dc - 2.0 * d as f64) / lambda_n).max(0.0))
}

/// Inputs of the selected-order receiver analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedOrderParams {
    pub order: usize,
    pub m: usize,
    pub d: usize,
    /// Energy fraction captured by order `M - m`.
    pub alpha: f64,
    pub lambda: f64,
    pub delta_c: f64,
}

impl SelectedOrderParams {
    pub fn from_spec(order: usize, m: usize, d: usize, alpha: f64, lambda: f64, spec: &CriterionSpec) -> Result<Self> {
        Ok(Self { order, m, d, alpha, lambda, delta_c: spec.delta_c(order, m)? })
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m >= self.order {
            return Err(domain(format!("need 0 < m < M, got M = {}, m = {}", self.order, self.m)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(domain("energy fraction must lie in [0, 1]"));
        }
        if !(self.lambda >= 0.0) || !(self.delta_c >= 0.0) {
            return Err(domain("lambda and delta_c must be nonnegative"));
        }
        Ok(())
    }
}

/// Threshold specification for [`selected_order_performance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Normalized threshold `eta / sigma^2`.
    Normalized(f64),
    /// Target false-alarm probability.
    Pfa(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub pfa: f64,
    pub pd: f64,
    pub theta: f64,
}

struct Laws {
    step: ChiSquared,
    lower: ChiSquared,
    upper: ChiSquared,
}

fn laws(p: &SelectedOrderParams, signal: bool) -> Result<Laws> {
    let (lam_hi, lam_lo) = if signal { (p.lambda, p.alpha * p.lambda) } else { (0.0, 0.0) };
    Ok(Laws {
        step: ChiSquared::new((2 * p.d * p.m) as u32, lam_hi - lam_lo)?,
        lower: ChiSquared::new(dof(p.order - p.m, p.d), lam_lo)?,
        upper: ChiSquared::new(dof(p.order, p.d), lam_hi)?,
    })
}

/// Probability that the selected-order receiver exceeds `theta`.
fn exceedance(p: &SelectedOrderParams, l: &Laws, theta: f64) -> Result<f64> {
    let dc = p.delta_c;
    let f_dc = l.step.cdf(dc)?;
    let fbar_dc = l.step.ccdf(dc)?;
    if theta <= dc {
        return Ok((f_dc * l.lower.ccdf(theta)? + fbar_dc).clamp(0.0, 1.0));
    }
    let base = f_dc * l.lower.ccdf(theta)? + fbar_dc * l.upper.ccdf(theta - dc)?;
    // Integrand errors are swallowed to NaN and surface below.
    let integrand = |u: f64| -> f64 {
        let v = (|| -> Result<f64> {
            let a = l.step.ccdf((theta - u).max(0.0))?;
            let b = l.step.ccdf((theta - dc - u).max(0.0))?;
            Ok((a - fbar_dc * b) * l.lower.pdf(u)?)
        })();
        v.unwrap_or(f64::NAN)
    };
    let upper = theta - dc;
    // The lower-order density is singular at 0 for 1 degree of freedom.
    let split = (upper * 1e-6).min(1e-8);
    let mut integral = integrate(integrand, split, upper, QUAD_TOL, QUAD_TOL);
    integral += integrate(integrand, 0.0, split, QUAD_TOL, QUAD_TOL);
    if !integral.is_finite() {
        return Err(domain("selected-order integral did not converge"));
    }
    Ok((base + integral).clamp(0.0, 1.0))
}

/// False-alarm and detection probabilities of the receiver whose order is
/// chosen between `M - m` and `M` by the criterion.
pub fn selected_order_performance(p: &SelectedOrderParams, threshold: Threshold) -> Result<OperatingPoint> {
    p.validate()?;
    let h0 = laws(p, false)?;
    let h1 = laws(p, true)?;
    let theta = match threshold {
        Threshold::Normalized(t) => {
            if !(t >= 0.0) {
                return Err(domain("threshold must be nonnegative"));
            }
            t
        }
        Threshold::Pfa(target) => {
            if !(target > 0.0 && target < 1.0) {
                return Err(domain(format!("pfa must lie in (0, 1), got {target}")));
            }
            let mut lo = 0.0;
            let mut hi = h0.upper.inverse_ccdf(target)? + p.delta_c + 1.0;
            while exceedance(p, &h0, hi)? > target {
                lo = hi;
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if exceedance(p, &h0, mid)? > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-12 * hi {
                    break;
                }
            }
            0.5 * (lo + hi)
        }
    };
    Ok(OperatingPoint { pfa: exceedance(p, &h0, theta)?, pd: exceedance(p, &h1, theta)?, theta })
}
