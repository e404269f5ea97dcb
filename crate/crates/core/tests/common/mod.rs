//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::{ChiSquared as ChiSq, Distribution, StandardNormal};

/// `ln Gamma` by Lanczos (g = 7, n = 9), independent of the library backend.
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower gamma `P(s, z)` by its power series.
pub fn lower_gamma_series(s: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= z / (s + k);
        sum += term;
        k += 1.0;
        if k > 1e6 {
            break;
        }
    }
    (s * z.ln() - z - ln_gamma(s) + sum.ln()).exp()
}

/// Regularized upper gamma `Q(s, z)` by the Legendre continued fraction
/// (modified Lentz), for `z > s + 1`.
pub fn upper_gamma_fraction(s: f64, z: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = z + 1.0 - s;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (s * z.ln() - z - ln_gamma(s)).exp() * h
}

/// Central chi-squared cdf: series below `s + 1`, continued fraction above.
pub fn chi2_cdf_oracle(nu: f64, x: f64) -> f64 {
    let (s, z) = (0.5 * nu, 0.5 * x);
    if z < s + 1.0 {
        lower_gamma_series(s, z)
    } else {
        1.0 - upper_gamma_fraction(s, z)
    }
}

/// Central chi-squared ccdf with the same branches.
pub fn chi2_ccdf_oracle(nu: f64, x: f64) -> f64 {
    let (s, z) = (0.5 * nu, 0.5 * x);
    if z < s + 1.0 {
        1.0 - lower_gamma_series(s, z)
    } else {
        upper_gamma_fraction(s, z)
    }
}

/// Noncentral ccdf by summing the Poisson mixture from k = 0.
pub fn ncx2_ccdf_oracle(nu: f64, lambda: f64, x: f64) -> f64 {
    let h = 0.5 * lambda;
    let kmax = (h + 40.0 * h.sqrt() + 60.0) as usize;
    let mut total = 0.0;
    for k in 0..=kmax {
        let lw = if h == 0.0 {
            if k == 0 { 0.0 } else { f64::NEG_INFINITY }
        } else {
            -h + k as f64 * h.ln() - ln_gamma(k as f64 + 1.0)
        };
        total += lw.exp() * chi2_ccdf_oracle(nu + 2.0 * k as f64, x);
    }
    total
}

/// Monte Carlo exceedance of `(Z + sqrt(lambda))^2 + chi^2_(nu-1)` over `x`,
/// with its standard error.
pub fn ncx2_ccdf_monte_carlo<R: Rng>(nu: u32, lambda: f64, x: f64, samples: usize, rng: &mut R) -> (f64, f64) {
    let mu = lambda.sqrt();
    let rest = if nu > 1 { Some(ChiSq::new((nu - 1) as f64).unwrap()) } else { None };
    let mut hits = 0usize;
    for _ in 0..samples {
        let z: f64 = rng.sample(StandardNormal);
        let mut v = (z + mu) * (z + mu);
        if let Some(r) = &rest {
            v += r.sample(rng);
        }
        if v > x {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt().max(1.0 / samples as f64))
}

/// Relative difference against a scale floor.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// `rows x cols` matrix of iid standard normals.
pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}
