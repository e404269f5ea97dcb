//! Central and noncentral chi-squared laws.
//!
//! The noncentral law is summed as a Poisson mixture of central laws over a
//! window around the Poisson mode. Central tails for successive degrees of
//! freedom come from the upward recurrence
//! `Q_(a+2)(x) = Q_a(x) + (x/2)^(a/2) e^(-x/2) / Gamma(a/2 + 1)`.
//!
//! For integer `a` above the mean, `Q_a` is the finite sum obtained by
//! unrolling that recurrence from `Q_1 = erfc(sqrt(x/2))` or `Q_2 = e^(-x/2)`;
//! below the mean the lower series of the incomplete gamma function is used.
//! Both are sums of positive terms.

use libm::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{domain, Result};

const SERIES_REL: f64 = 1e-17;
const WINDOW_REL: f64 = 1e-18;
const MAX_TERMS: usize = 1_000_000;

const STIRLING_MIN: f64 = 10.0;

/// `ln Gamma(h+1) - (h ln h - h + ln(2 pi h) / 2)`; truncation error below
/// 1e-15 for `h >= STIRLING_MIN`.
fn stirling_correction(h: f64) -> f64 {
    let r = 1.0 / (h * h);
    (1.0 / 12.0 + r * (-1.0 / 360.0 + r * (1.0 / 1260.0 + r * (-1.0 / 1680.0 + r * (1.0 / 1188.0 - r * 691.0 / 360_360.0)))))
        / h
}

/// `v^h e^(-v) / Gamma(h + 1)`. For large `h` the form
/// `exp(-h (e - ln(1+e))) / (sqrt(2 pi h) e^s(h))` with `e = v/h - 1` avoids
/// the cancellation between `h ln v`, `v` and `ln Gamma`.
fn power_term(h: f64, v: f64) -> f64 {
    if h < STIRLING_MIN {
        if (2.0 * h).fract() == 0.0 && h >= 0.0 {
            // Gamma(h+1) as an exact product down to Gamma(1) or Gamma(3/2).
            let mut g = if h.fract() == 0.0 { 1.0 } else { 0.5 * std::f64::consts::PI.sqrt() };
            let mut f = h;
            while f >= 1.0 {
                g *= f;
                f -= 1.0;
            }
            return (h * v.ln() - v).exp() / g;
        }
        return (h * v.ln() - v - ln_gamma(h + 1.0)).exp();
    }
    let e = (v - h) / h;
    let core = -h * (e - e.ln_1p()) - stirling_correction(h);
    core.exp() / (2.0 * std::f64::consts::PI * h).sqrt()
}

/// Regularized lower incomplete gamma `P(h, v)` by its power series; only
/// used for `v < h + 1`, where the terms decrease.
fn lower_series(h: f64, v: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > SERIES_REL * sum && k < MAX_TERMS as f64 {
        term *= v / (h + k);
        sum += term;
        k += 1.0;
    }
    power_term(h, v) * sum
}

/// `Q_a(2v)` for integer `a` from the unrolled recurrence, summed downward
/// from its largest term. Requires `v >= a/2`.
fn upper_finite_sum(a: u64, v: f64) -> f64 {
    let m = a / 2;
    let (head, offset) = if a.is_multiple_of(2) { (0.0, 0.0) } else { (erfc(v.sqrt()), 0.5) };
    if m == 0 {
        return head;
    }
    // Terms v^(j+offset) e^-v / Gamma(j+offset+1), j < m, increase with j.
    let mut j = (m - 1) as f64;
    let mut term = power_term(j + offset, v);
    let mut sum = 0.0;
    loop {
        sum += term;
        if j == 0.0 || term < SERIES_REL * sum {
            break;
        }
        term *= (j + offset) / v;
        j -= 1.0;
    }
    head + sum
}

fn is_integer_dof(a: f64) -> bool {
    a >= 1.0 && a.fract() == 0.0 && a < 1e15
}

/// Upper tail of the central law with `a` degrees of freedom.
pub fn central_ccdf(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let (h, v) = (0.5 * a, 0.5 * x);
    if v < h {
        1.0 - lower_series(h, v)
    } else if is_integer_dof(a) {
        upper_finite_sum(a as u64, v)
    } else {
        gamma_ur(h, v)
    }
}

/// Lower tail of the central law with `a` degrees of freedom.
pub fn central_cdf(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let (h, v) = (0.5 * a, 0.5 * x);
    if v < h {
        lower_series(h, v)
    } else {
        1.0 - central_ccdf(a, x)
    }
}

/// `(x/2)^(a/2) e^(-x/2) / Gamma(a/2 + 1)`, the increment `Q_(a+2) - Q_a`.
pub fn central_ccdf_step(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    power_term(0.5 * a, 0.5 * x)
}

/// Density of the central law with `a` degrees of freedom.
pub fn central_pdf(a: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return if a < 2.0 {
            f64::INFINITY
        } else if a == 2.0 {
            0.5
        } else {
            0.0
        };
    }
    let h = 0.5 * a;
    if h >= 1.0 {
        return 0.5 * power_term(h - 1.0, 0.5 * x);
    }
    ((h - 1.0) * x.ln() - 0.5 * x - h * std::f64::consts::LN_2 - ln_gamma(h)).exp()
}

/// `chi^2_nu(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquared {
    nu: u32,
    lambda: f64,
}

impl ChiSquared {
    pub fn new(nu: u32, lambda: f64) -> Result<Self> {
        if nu == 0 {
            return Err(domain("degrees of freedom must be at least 1"));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(domain(format!("noncentrality must be finite and nonnegative, got {lambda}")));
        }
        Ok(Self { nu, lambda })
    }

    pub fn central(nu: u32) -> Result<Self> {
        Self::new(nu, 0.0)
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn mean(&self) -> f64 {
        self.nu as f64 + self.lambda
    }
    pub fn variance(&self) -> f64 {
        2.0 * (self.nu as f64 + 2.0 * self.lambda)
    }

    /// Poisson(lambda/2) weights on their significant window, first index
    /// and values. Weights follow from the mode by ratios and are normalized
    /// over the window, so they sum to 1 up to rounding.
    fn weights(&self) -> (usize, Vec<f64>) {
        let h = 0.5 * self.lambda;
        let mode = h.floor() as usize;
        let mut below = Vec::new();
        let mut w = 1.0;
        let mut k = mode;
        while k > 0 {
            w *= k as f64 / h;
            if w < WINDOW_REL {
                break;
            }
            below.push(w);
            k -= 1;
        }
        let lo = mode - below.len();
        below.reverse();
        let mut ws = below;
        ws.push(1.0);
        let mut w = 1.0;
        let mut k = mode;
        while ws.len() < MAX_TERMS {
            let r = h / (k + 1) as f64;
            // Geometric bound on everything beyond index k.
            if r < 1.0 && w * r / (1.0 - r) < WINDOW_REL {
                break;
            }
            w *= r;
            ws.push(w);
            k += 1;
        }
        let total: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|w| *w /= total);
        (lo, ws)
    }

    /// `P[X > x]`. Above the mean the central tails run up the recurrence;
    /// below it the complement of the lower tail is returned.
    pub fn ccdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(domain(format!("chi-squared argument must be nonnegative, got {x}")));
        }
        let nu = self.nu as f64;
        if x == 0.0 {
            return Ok(1.0);
        }
        if self.lambda == 0.0 {
            return Ok(central_ccdf(nu, x));
        }
        if x < self.mean() {
            return Ok(1.0 - self.cdf(x)?);
        }
        let (lo, ws) = self.weights();
        let mut a = nu + 2.0 * lo as f64;
        let mut q = central_ccdf(a, x);
        let mut sum = 0.0;
        for w in ws {
            sum += w * q;
            q = (q + central_ccdf_step(a, x)).min(1.0);
            a += 2.0;
        }
        Ok(sum.clamp(0.0, 1.0))
    }

    /// `P[X <= x]`, summed directly to keep relative accuracy in the lower tail.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(domain(format!("chi-squared argument must be nonnegative, got {x}")));
        }
        let nu = self.nu as f64;
        if x == 0.0 {
            return Ok(0.0);
        }
        if self.lambda == 0.0 {
            return Ok(central_cdf(nu, x));
        }
        if x >= self.mean() {
            return Ok(1.0 - self.ccdf(x)?);
        }
        let (lo, ws) = self.weights();
        let v: f64 = ws.iter().enumerate().map(|(i, w)| w * central_cdf(nu + 2.0 * (lo + i) as f64, x)).sum();
        Ok(v.clamp(0.0, 1.0))
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(domain(format!("chi-squared argument must be nonnegative, got {x}")));
        }
        let nu = self.nu as f64;
        if self.lambda == 0.0 || (x == 0.0 && self.nu != 2) {
            // At the origin only the k = 0 term of the mixture can be nonzero.
            let w0 = (-0.5 * self.lambda).exp();
            return Ok(w0 * central_pdf(nu, x));
        }
        let (lo, ws) = self.weights();
        Ok(ws.iter().enumerate().map(|(i, w)| w * central_pdf(nu + 2.0 * (lo + i) as f64, x)).sum())
    }

    /// `x` such that `P[X > x] = p`.
    pub fn inverse_ccdf(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!("probability must lie in (0, 1), got {p}")));
        }
        let mut lo = 0.0;
        let mut hi = self.mean() + 10.0 * self.variance().sqrt() + 10.0;
        while self.ccdf(hi)? > p {
            lo = hi;
            hi *= 2.0;
        }
        let log_form = p < 0.5;
        let target = p.ln();
        let mut x = 0.5 * (lo + hi);
        for _ in 0..300 {
            let q = self.ccdf(x)?;
            if q == p {
                return Ok(x);
            }
            if q > p {
                lo = x;
            } else {
                hi = x;
            }
            let f = self.pdf(x)?;
            let step = if f > 0.0 && q > 0.0 {
                if log_form {
                    (q.ln() - target) * q / f
                } else {
                    (q - p) / f
                }
            } else {
                f64::NAN
            };
            let mut next = x + step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}
