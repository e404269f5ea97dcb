//! Multipolar orthonormal basis functions `g_(N,n)` and their sampled matrices.
//!
//! `g_(N,n)(u) = P_(N,n)(u) / (1 + u^2)^(N + 3/2)` where the `P_(N,n)` are
//! orthonormal for the weight `(1 + u^2)^(-2N-3)`. Coefficients are exact
//! integers scaled once by `c_(N,n)`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};
use crate::field::{f_basis, TrajectoryGeometry};

/// Largest signal order accepted by the basis constructors.
pub const MAX_ORDER: usize = 8;

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn binomial(n: usize, k: usize) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    // Shift both operands into f64 range before dividing.
    let shift = num.bits().max(den.bits()).saturating_sub(1000);
    let n = (num >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (den >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

fn check_indices(order: usize, n: usize) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        return Err(domain(format!("signal order must lie in 1..={MAX_ORDER}, got {order}")));
    }
    if n > 2 * order {
        return Err(domain(format!("degree n = {n} exceeds 2N = {}", 2 * order)));
    }
    Ok(())
}

/// Analytical polynomial `P_(N,n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobfPolynomial {
    order: usize,
    degree: usize,
    c_squared_num: BigInt,
    c_squared_den: BigInt,
    terms: Vec<(usize, BigInt)>,
    monomials: Vec<BigInt>,
    c: f64,
    coeffs: Vec<f64>,
}

/// `d_(N,n,k) = (-1)^(n-k) n! (2N+2-k)! / ((2N+2-n)! k! (n-2k)!)`.
pub fn d_coefficient(order: usize, n: usize, k: usize) -> Result<BigInt> {
    check_indices(order, n)?;
    if 2 * k > n {
        return Err(domain(format!("k = {k} exceeds floor(n/2) for n = {n}")));
    }
    let top = 2 * order + 2;
    let magnitude = factorial(n) * factorial(top - k)
        / (factorial(top - n) * factorial(k) * factorial(n - 2 * k));
    Ok(if (n - k) % 2 == 1 { -magnitude } else { magnitude })
}

/// `c_(N,n)^2 = num / (den * pi)` in lowest terms.
pub fn c_squared_rational(order: usize, n: usize) -> Result<(BigInt, BigInt)> {
    check_indices(order, n)?;
    let top = 2 * order + 2 - n;
    let f = factorial(top);
    let num = BigInt::from(4u8).pow(top as u32) * BigInt::from(4 * order + 5 - 2 * n) * &f * &f;
    let den = factorial(n) * factorial(4 * order + 5 - n);
    let g = num.gcd(&den);
    Ok((num / &g, den / g))
}

pub fn mobf_polynomial(order: usize, n: usize) -> Result<MobfPolynomial> {
    check_indices(order, n)?;
    let terms: Vec<(usize, BigInt)> =
        (0..=n / 2).map(|k| d_coefficient(order, n, k).map(|d| (k, d))).collect::<Result<_>>()?;
    let mut monomials = vec![BigInt::zero(); n + 1];
    for (k, d) in &terms {
        let base = d * (BigInt::one() << (n - 2 * k));
        for j in 0..=*k {
            monomials[n - 2 * k + 2 * j] += &base * binomial(*k, j);
        }
    }
    let (num, den) = c_squared_rational(order, n)?;
    let c = (ratio_to_f64(&num, &den) / std::f64::consts::PI).sqrt();
    let coeffs = monomials.iter().map(|m| c * m.to_f64().unwrap_or(f64::NAN)).collect();
    Ok(MobfPolynomial {
        order,
        degree: n,
        c_squared_num: num,
        c_squared_den: den,
        terms,
        monomials,
        c,
        coeffs,
    })
}

impl MobfPolynomial {
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    /// Normalization constant `c_(N,n)`.
    pub fn c(&self) -> f64 {
        self.c
    }
    /// `(num, den)` with `c^2 = num / (den pi)`.
    pub fn c_squared(&self) -> (&BigInt, &BigInt) {
        (&self.c_squared_num, &self.c_squared_den)
    }
    pub fn terms(&self) -> &[(usize, BigInt)] {
        &self.terms
    }
    /// Integer monomial coefficients of `P_(N,n) / c`, by ascending power.
    pub fn integer_monomials(&self) -> &[BigInt] {
        &self.monomials
    }
    /// Monomial coefficients of `P_(N,n)`, by ascending power.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn leading_coefficient(&self) -> f64 {
        self.coeffs[self.degree]
    }

    pub fn eval_polynomial(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// `g_(N,n)(u)`.
    pub fn eval(&self, u: f64) -> f64 {
        self.eval_polynomial(u) / (1.0 + u * u).powf(self.order as f64 + 1.5)
    }
}

/// Closed-form `p_(N,n) = c (-1)^n n! C(4N+5-n, n)` for the leading coefficient.
pub fn leading_coefficient_closed_form(order: usize, n: usize) -> Result<f64> {
    let p = mobf_polynomial(order, n)?;
    let exact = factorial(n) * binomial(4 * order + 5 - n, n);
    let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * p.c() * exact.to_f64().unwrap_or(f64::NAN))
}

/// `g_(N,n)(u)` via the expanded polynomial.
pub fn mobf_eval(order: usize, n: usize, u: f64) -> Result<f64> {
    Ok(mobf_polynomial(order, n)?.eval(u))
}

/// Gegenbauer polynomial `C_n^(alpha)(x)` by the three-term recurrence.
pub fn gegenbauer(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * alpha * x;
    for k in 2..=n {
        let kf = k as f64;
        let next = (2.0 * x * (kf + alpha - 1.0) * cur - (kf + 2.0 * alpha - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    cur
}

/// `g_(N,n)(u) = (-1)^n c n! (1+u^2)^((n-3)/2 - N) C_n^(2N+3-n)(u / sqrt(1+u^2))`.
pub fn mobf_eval_gegenbauer(order: usize, n: usize, u: f64) -> Result<f64> {
    check_indices(order, n)?;
    let (num, den) = c_squared_rational(order, n)?;
    let c = (ratio_to_f64(&num, &den) / std::f64::consts::PI).sqrt();
    let nfact: f64 = (1..=n).map(|k| k as f64).product();
    let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
    let w = 1.0 + u * u;
    let x = u / w.sqrt();
    let alpha = (2 * order + 3 - n) as f64;
    Ok(sign * c * nfact * w.powf((n as f64 - 3.0) / 2.0 - order as f64) * gegenbauer(n, alpha, x))
}

/// All `2N+1` analytical functions of one order.
#[derive(Debug, Clone, PartialEq)]
pub struct MobfBasis {
    order: usize,
    polys: Vec<MobfPolynomial>,
}

impl MobfBasis {
    pub fn new(order: usize) -> Result<Self> {
        check_indices(order, 0)?;
        let polys = (0..=2 * order).map(|n| mobf_polynomial(order, n)).collect::<Result<_>>()?;
        Ok(Self { order, polys })
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn polynomials(&self) -> &[MobfPolynomial] {
        &self.polys
    }
    pub fn eval(&self, n: usize, u: f64) -> f64 {
        self.polys[n].eval(u)
    }
}

/// Which matrix a [`SampledBasisMatrix`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// Analytical `G_N`.
    Mobf,
    /// `F_N`, sampled `f_(N,n)`.
    Raw,
    /// Gram–Schmidt of `F_N`.
    RawOrthonormalized,
    /// Gram–Schmidt of `G_N`.
    MobfReorthonormalized,
}

impl BasisKind {
    pub fn label(self) -> &'static str {
        match self {
            BasisKind::Mobf => "G",
            BasisKind::Raw => "F",
            BasisKind::RawOrthonormalized => "F_gs",
            BasisKind::MobfReorthonormalized => "G_gs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g" | "mobf" => Ok(BasisKind::Mobf),
            "f" | "raw" => Ok(BasisKind::Raw),
            "f_gs" | "fgs" | "raw_gs" => Ok(BasisKind::RawOrthonormalized),
            "g_gs" | "ggs" | "mobf_gs" => Ok(BasisKind::MobfReorthonormalized),
            other => Err(Error::Config(format!("unknown basis kind {other:?} (expected G, F, F_gs or G_gs)"))),
        }
    }

    /// Rows have orthonormal rows up to sampling error.
    pub fn is_orthonormal(self) -> bool {
        !matches!(self, BasisKind::Raw)
    }
}

/// `(2N+1) x K` sampled basis; every row carries the factor `sqrt(R/(K-1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBasisMatrix {
    kind: BasisKind,
    order: usize,
    rows: DMatrix<f64>,
    row_scale: f64,
}

impl SampledBasisMatrix {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }
    pub fn row_scale(&self) -> f64 {
        self.row_scale
    }
    pub fn into_rows(self) -> DMatrix<f64> {
        self.rows
    }
}

pub fn sample_basis(order: usize, geom: &TrajectoryGeometry, kind: BasisKind) -> Result<SampledBasisMatrix> {
    check_indices(order, 0)?;
    let dim = 2 * order + 1;
    let k = geom.samples();
    if k <= dim {
        return Err(Error::Rank(format!("K = {k} samples cannot support {dim} basis functions")));
    }
    let scale = geom.step().sqrt();
    let grid = geom.grid();
    let raw = matches!(kind, BasisKind::Raw | BasisKind::RawOrthonormalized);
    let mut rows = DMatrix::zeros(dim, k);
    if raw {
        for n in 0..dim {
            for (j, &u) in grid.iter().enumerate() {
                rows[(n, j)] = scale * f_basis(order, n, u)?;
            }
        }
    } else {
        let basis = MobfBasis::new(order)?;
        for n in 0..dim {
            for (j, &u) in grid.iter().enumerate() {
                rows[(n, j)] = scale * basis.eval(n, u);
            }
        }
    }
    if matches!(kind, BasisKind::RawOrthonormalized | BasisKind::MobfReorthonormalized) {
        rows = gram_schmidt(&rows)?;
    }
    Ok(SampledBasisMatrix { kind, order, rows, row_scale: scale })
}

/// `||G G^T - I||_F / sqrt(rows)`.
pub fn orthonormality_error(mat: &DMatrix<f64>) -> f64 {
    let n = mat.nrows();
    if n == 0 {
        return 0.0;
    }
    let gram = mat * mat.transpose();
    (gram - DMatrix::<f64>::identity(n, n)).norm() / (n as f64).sqrt()
}

const RANK_TOL: f64 = 1e-13;

/// Modified Gram–Schmidt over rows with one reorthogonalization pass.
pub fn gram_schmidt(mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = mat.shape();
    if rows > cols {
        return Err(Error::Rank(format!("{rows} rows cannot be independent in dimension {cols}")));
    }
    // Work on columns of the transpose so every vector is contiguous.
    let mut q = mat.transpose();
    for i in 0..rows {
        let original = q.column(i).norm();
        for _pass in 0..2 {
            for j in 0..i {
                let proj = q.column(i).dot(&q.column(j));
                let qj = q.column(j).clone_owned();
                q.column_mut(i).axpy(-proj, &qj, 1.0);
            }
        }
        let norm = q.column(i).norm();
        if !(norm > RANK_TOL * original.max(f64::MIN_POSITIVE)) {
            return Err(Error::Rank(format!("row {i} is linearly dependent on earlier rows")));
        }
        q.column_mut(i).scale_mut(1.0 / norm);
    }
    Ok(q.transpose())
}

/// Orthogonal projector `B^T (B B^T)^-1 B` onto the row span of `b`.
pub fn row_space_projector(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = gram_schmidt(b)?;
    Ok(q.transpose() * q)
}

/// Flips each row of `gs` so its sign matches the corresponding analytical
/// row at the sample where the latter is largest in magnitude.
pub fn align_row_signs(gs: &DMatrix<f64>, reference: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = gs.clone();
    for i in 0..gs.nrows().min(reference.nrows()) {
        let r = reference.row(i).transpose();
        let j = r.iamax();
        if (gs[(i, j)] * r[j]).is_sign_negative() {
            out.row_mut(i).neg_mut();
        }
    }
    out
}
