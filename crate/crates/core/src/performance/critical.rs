use crate::error::{domain, Result};
use crate::performance::chi2::ChiSquared;
use crate::performance::roc::threshold_for_pfa;

const ALPHA_TOL: f64 = 1e-6;

fn check_pfa(pfa: f64) -> Result<()> {
    if pfa > 0.0 && pfa < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("pfa must lie in (0, 1), got {pfa}")))
    }
}

/// `SNR_(N-1) / SNR_N = alpha (2N+1) / (2N-1)`.
pub fn snr_ratio(order: usize, alpha: f64) -> Result<f64> {
    if order < 2 {
        return Err(domain("the SNR ratio needs N >= 2"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain(format!("energy fraction must lie in [0, 1], got {alpha}")));
    }
    Ok(alpha * (2 * order + 1) as f64 / (2 * order - 1) as f64)
}

/// Degrees of freedom of an order-`order` receiver with `d` sensor axes.
pub fn dof(order: usize, d: usize) -> u32 {
    (d * (2 * order + 1)) as u32
}

/// Energy fraction at which the order-(N-1) receiver matches the order-N
/// receiver, found by bisection. Returns 1 when the order-N receiver wins
/// over the whole range.
pub fn critical_alpha(order: usize, d: usize, pfa: f64, lambda_n: f64) -> Result<f64> {
    check_pfa(pfa)?;
    if order < 2 {
        return Err(domain("critical alpha needs N >= 2"));
    }
    if !(lambda_n > 0.0) || !lambda_n.is_finite() {
        return Err(domain("lambda_N must be positive"));
    }
    let (nu_hi, nu_lo) = (dof(order, d), dof(order - 1, d));
    let pd_n = ChiSquared::new(nu_hi, lambda_n)?.ccdf(threshold_for_pfa(nu_hi, pfa)?)?;
    let theta_lo = threshold_for_pfa(nu_lo, pfa)?;
    let gap = |alpha: f64| -> Result<f64> {
        Ok(pd_n - ChiSquared::new(nu_lo, alpha * lambda_n)?.ccdf(theta_lo)?)
    };
    if gap(1.0)? > 0.0 {
        return Ok(1.0);
    }
    if gap(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > ALPHA_TOL {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grid specification for the order-3 optimal-receiver map.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneParams {
    pub pfa: f64,
    pub lambda3: f64,
    pub d: usize,
    /// Number of cells along each axis over `[0, 1]`.
    pub resolution: usize,
}

/// `cells[i][j]` is the best order at `alpha' = i / (n-1)` and
/// `alpha - alpha' = j / (n-1)`, or `None` when infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneMap {
    pub axis: Vec<f64>,
    pub cells: Vec<Vec<Option<u8>>>,
}

impl ZoneMap {
    /// Fraction of feasible cells assigned to `order`.
    pub fn area(&self, order: u8) -> f64 {
        let feasible = self.cells.iter().flatten().filter(|c| c.is_some()).count();
        let hits = self.cells.iter().flatten().filter(|c| **c == Some(order)).count();
        hits as f64 / feasible.max(1) as f64
    }
}

/// Best receiver order among 1, 2, 3 over the `(alpha', alpha - alpha')`
/// plane, ties going to the smaller order.
pub fn optimal_order_map(params: &ZoneParams) -> Result<ZoneMap> {
    check_pfa(params.pfa)?;
    if params.resolution < 2 {
        return Err(domain("zone grid needs at least 2 cells per axis"));
    }
    if !(params.lambda3 >= 0.0) {
        return Err(domain("lambda_3 must be nonnegative"));
    }
    let n = params.resolution;
    let axis: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let nus = [dof(1, params.d), dof(2, params.d), dof(3, params.d)];
    let thetas = nus.iter().map(|&nu| threshold_for_pfa(nu, params.pfa)).collect::<Result<Vec<_>>>()?;
    let pd3 = ChiSquared::new(nus[2], params.lambda3)?.ccdf(thetas[2])?;
    use rayon::prelude::*;
    let cells = axis
        .par_iter()
        .map(|&a1| {
            axis.iter()
                .map(|&delta| {
                    if a1 + delta > 1.0 + 1e-12 {
                        return Ok(None);
                    }
                    let a2 = (a1 + delta).min(1.0);
                    let pd1 = ChiSquared::new(nus[0], a1 * params.lambda3)?.ccdf(thetas[0])?;
                    let pd2 = ChiSquared::new(nus[1], a2 * params.lambda3)?.ccdf(thetas[1])?;
                    let mut best = (1u8, pd1);
                    for (order, pd) in [(2u8, pd2), (3u8, pd3)] {
                        if pd > best.1 {
                            best = (order, pd);
                        }
                    }
                    Ok(Some(best.0))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ZoneMap { axis, cells })
}
