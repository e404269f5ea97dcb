use crate::detector::ReceiverStatistics;
use crate::error::{domain, Result};
use crate::performance::chi2::ChiSquared;

/// One operating point; `theta` is the normalized threshold `eta / sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub pfa: f64,
    pub pd: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Normalized threshold achieving `pfa` for a receiver with `nu` degrees of freedom.
pub fn threshold_for_pfa(nu: u32, pfa: f64) -> Result<f64> {
    ChiSquared::central(nu)?.inverse_ccdf(pfa)
}

/// `Pd = Qbar_(nu, lambda)(Qbar_nu^-1(pfa))`.
pub fn detection_probability(nu: u32, lambda: f64, pfa: f64) -> Result<f64> {
    if pfa <= 0.0 || pfa >= 1.0 {
        if pfa == 0.0 || pfa == 1.0 {
            return Ok(pfa);
        }
        return Err(domain(format!("pfa must lie in [0, 1], got {pfa}")));
    }
    let theta = threshold_for_pfa(nu, pfa)?;
    ChiSquared::new(nu, lambda)?.ccdf(theta)
}

/// Refined integration grid: log-spaced on `[1e-16, 1e-2]`, linear on `[1e-2, 1)`.
pub fn auc_grid() -> Vec<f64> {
    let mut g = Vec::with_capacity(4001);
    let n_log = 2000;
    for i in 0..n_log {
        g.push(10f64.powf(-16.0 + 14.0 * i as f64 / n_log as f64));
    }
    let n_lin = 2000;
    for i in 0..n_lin {
        g.push(1e-2 + (1.0 - 1e-2) * i as f64 / n_lin as f64);
    }
    g
}

fn trapezoid(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| 0.5 * (w[1].pfa - w[0].pfa) * (w[1].pd + w[0].pd))
        .sum()
}

/// Points on `grid` plus the end points `(0,0)` and `(1,1)`, sorted by pfa.
fn curve_points(nu: u32, lambda: f64, grid: &[f64]) -> Result<Vec<RocPoint>> {
    let mut pfas: Vec<f64> = grid.to_vec();
    if let Some(bad) = pfas.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(domain(format!("pfa grid values must lie in (0, 1), got {bad}")));
    }
    pfas.sort_by(f64::total_cmp);
    pfas.dedup();
    let central = ChiSquared::central(nu)?;
    let law = ChiSquared::new(nu, lambda)?;
    let mut points = Vec::with_capacity(pfas.len() + 2);
    points.push(RocPoint { pfa: 0.0, pd: 0.0, theta: f64::INFINITY });
    for pfa in pfas {
        let theta = central.inverse_ccdf(pfa)?;
        let pd = if lambda == 0.0 { pfa } else { law.ccdf(theta)? };
        points.push(RocPoint { pfa, pd, theta });
    }
    points.push(RocPoint { pfa: 1.0, pd: 1.0, theta: 0.0 });
    Ok(points)
}

/// Area under the ROC of `chi^2_nu(lambda)` against `chi^2_nu`.
pub fn auc(nu: u32, lambda: f64) -> Result<f64> {
    Ok(trapezoid(&curve_points(nu, lambda, &auc_grid())?))
}

/// Analytic ROC on `pfa_grid`; the AUC always uses the refined grid.
pub fn roc(stats: &ReceiverStatistics, pfa_grid: &[f64]) -> Result<RocCurve> {
    roc_for(stats.nu, stats.lambda, pfa_grid)
}

pub fn roc_for(nu: u32, lambda: f64, pfa_grid: &[f64]) -> Result<RocCurve> {
    Ok(RocCurve { points: curve_points(nu, lambda, pfa_grid)?, auc: auc(nu, lambda)? })
}

/// `n` log-spaced values in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}
