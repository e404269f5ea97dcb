//! GLRT energy detector.
//!
//! Every receiver reduces to a `K x r` transform `T` with statistic
//! `||x T||_F^2`: `T = G^T` for orthonormal bases and `T = F^+ L` with
//! `F F^T = L L^T` for the pseudo-inverse path on a raw basis.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{domain, shape, Error, Result};
use crate::field::{SampledSignal, TrajectoryGeometry};
use crate::mobf::{gram_schmidt, sample_basis, BasisKind, SampledBasisMatrix};
use crate::performance::{detection_probability, ChiSquared};

/// Gram matrices beyond this condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Sensor record `x`, `d x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: DMatrix<f64>,
    pub hypothesis: Option<Hypothesis>,
}

impl Observation {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(domain("observation entries must be finite"));
        }
        Ok(Self { x, hypothesis: None })
    }

    pub fn tagged(x: DMatrix<f64>, hypothesis: Hypothesis) -> Result<Self> {
        Ok(Self { hypothesis: Some(hypothesis), ..Self::new(x)? })
    }
}

/// Gaussian noise covariance structure.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    White { variance: f64 },
    /// `Cov(vec x) = Sigma_t (x) Sigma_s` with spatial `d x d` and temporal `K x K` factors.
    Kronecker { spatial: DMatrix<f64>, temporal: DMatrix<f64> },
    /// Covariance of the row-stacked observation, `dK x dK`.
    Full { covariance: DMatrix<f64> },
}

fn check_spd(m: &DMatrix<f64>, name: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if !m.is_square() {
        return Err(Error::NotPositiveDefinite(format!("{name} is not square")));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite(format!("{name} is not symmetric")));
    }
    Cholesky::new(m.clone()).ok_or_else(|| Error::NotPositiveDefinite(format!("{name} has no Cholesky factor")))
}

impl NoiseModel {
    pub fn white(variance: f64) -> Result<Self> {
        let m = NoiseModel::White { variance };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::White { variance } => {
                if !(*variance > 0.0) || !variance.is_finite() {
                    return Err(Error::NotPositiveDefinite(format!("variance must be positive, got {variance}")));
                }
            }
            NoiseModel::Kronecker { spatial, temporal } => {
                check_spd(spatial, "spatial covariance")?;
                check_spd(temporal, "temporal covariance")?;
            }
            NoiseModel::Full { covariance } => {
                check_spd(covariance, "covariance")?;
            }
        }
        Ok(())
    }

    /// Checks the model against a `d x K` observation shape.
    pub fn check_shape(&self, d: usize, k: usize) -> Result<()> {
        match self {
            NoiseModel::White { .. } => Ok(()),
            NoiseModel::Kronecker { spatial, temporal } => {
                if spatial.nrows() != d || temporal.nrows() != k {
                    return Err(shape(format!(
                        "Kronecker factors are {}x{} and {}x{}, observation is {d}x{k}",
                        spatial.nrows(),
                        spatial.ncols(),
                        temporal.nrows(),
                        temporal.ncols()
                    )));
                }
                Ok(())
            }
            NoiseModel::Full { covariance } => {
                if covariance.nrows() != d * k {
                    return Err(shape(format!("covariance is {}x{}, expected {}", covariance.nrows(), covariance.ncols(), d * k)));
                }
                Ok(())
            }
        }
    }
}

/// `(nu_M, lambda_M)` of an order-`M` receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverStatistics {
    pub nu: u32,
    pub lambda: f64,
    pub order: usize,
    pub d: usize,
}

impl ReceiverStatistics {
    pub fn new(order: usize, d: usize, lambda: f64) -> Result<Self> {
        if order == 0 || d == 0 {
            return Err(domain("order and sensor dimension must be positive"));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(domain(format!("noncentrality must be finite and nonnegative, got {lambda}")));
        }
        Ok(Self { nu: (d * (2 * order + 1)) as u32, lambda, order, d })
    }

    /// Law of the normalized statistic under H0.
    pub fn null_law(&self) -> ChiSquared {
        ChiSquared::central(self.nu).expect("nu >= 1")
    }

    /// Law of the normalized statistic under H1.
    pub fn alternative_law(&self) -> ChiSquared {
        ChiSquared::new(self.nu, self.lambda).expect("validated")
    }

    pub fn pd(&self, pfa: f64) -> Result<f64> {
        detection_probability(self.nu, self.lambda, pfa)
    }
}

fn condition_number(gram: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn gram_cholesky(f: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if f.nrows() > f.ncols() {
        return Err(Error::Rank(format!("{} basis rows exceed {} samples", f.nrows(), f.ncols())));
    }
    let gram = f * f.transpose();
    let cond = condition_number(&gram);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    Cholesky::new(gram).ok_or_else(|| Error::Rank("basis Gram matrix is singular".into()))
}

/// `F^+ = F^T (F F^T)^-1`.
pub fn pseudo_inverse(f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = gram_cholesky(f)?;
    Ok(chol.solve(f).transpose())
}

/// A receiver of a given order as a sample-space transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    order: usize,
    kind: BasisKind,
    transform: DMatrix<f64>,
}

impl Receiver {
    /// `T = B^T` for a basis with (nearly) orthonormal rows.
    pub fn projection(order: usize, kind: BasisKind, basis: &DMatrix<f64>) -> Self {
        Self { order, kind, transform: basis.transpose() }
    }

    /// `T = F^+ L` so that `||x T||^2 = Tr(A F F^T A^T)` with `A = x F^+`.
    pub fn pseudo_inverse(order: usize, f: &DMatrix<f64>) -> Result<Self> {
        let chol = gram_cholesky(f)?;
        let pinv = chol.solve(f).transpose();
        let l = chol.l();
        Ok(Self { order, kind: BasisKind::Raw, transform: pinv * l })
    }

    pub fn from_basis(basis: &SampledBasisMatrix) -> Result<Self> {
        if basis.kind().is_orthonormal() {
            Ok(Self::projection(basis.order(), basis.kind(), basis.rows()))
        } else {
            Self::pseudo_inverse(basis.order(), basis.rows())
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }
    pub fn kind(&self) -> BasisKind {
        self.kind
    }
    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }
    pub fn samples(&self) -> usize {
        self.transform.nrows()
    }

    pub fn project(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.transform.nrows() {
            return Err(shape(format!("observation has {} samples, receiver expects {}", x.ncols(), self.transform.nrows())));
        }
        Ok(x * &self.transform)
    }

    /// `||x T||_F^2`, not normalized by the noise variance.
    pub fn statistic(&self, x: &DMatrix<f64>) -> Result<f64> {
        Ok(self.project(x)?.norm_squared())
    }
}

/// Maximum-likelihood coefficients `x G^T` or `x F^+`.
pub fn estimate_coefficients(x: &DMatrix<f64>, basis: &SampledBasisMatrix) -> Result<DMatrix<f64>> {
    if x.ncols() != basis.rows().ncols() {
        return Err(shape(format!("observation has {} samples, basis has {}", x.ncols(), basis.rows().ncols())));
    }
    if basis.kind().is_orthonormal() {
        Ok(x * basis.rows().transpose())
    } else {
        Ok(x * pseudo_inverse(basis.rows())?)
    }
}

/// `||A||_F^2`.
pub fn energy_statistic(a: &DMatrix<f64>) -> f64 {
    a.norm_squared()
}

/// `Tr(A F F^T A^T)` for coefficients estimated on a raw basis.
pub fn energy_statistic_raw(a: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<f64> {
    if a.ncols() != f.nrows() {
        return Err(shape("coefficient and basis dimensions differ"));
    }
    Ok((a * f).norm_squared())
}

/// H1 iff `statistic > eta`.
pub fn decide(statistic: f64, eta: f64) -> Hypothesis {
    if statistic > eta {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

/// `nu = d(2M+1)`, `lambda = ||s T||^2 / sigma^2`.
pub fn receiver_stats(s: &SampledSignal, basis: &SampledBasisMatrix, variance: f64) -> Result<ReceiverStatistics> {
    if !(variance > 0.0) {
        return Err(domain("noise variance must be positive"));
    }
    let rx = Receiver::from_basis(basis)?;
    let lambda = rx.statistic(s.values())? / variance;
    ReceiverStatistics::new(basis.order(), s.values().nrows(), lambda)
}

/// Choice of square-root factor for whitening.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Factorization {
    #[default]
    Cholesky,
    /// Symmetric inverse square root `Sigma^(-1/2)`.
    Eigen,
}

fn inverse_sqrt(m: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    check_spd(m, name)?;
    let eig = SymmetricEigen::new(m.clone());
    let d = eig.eigenvalues.map(|v| 1.0 / v.sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose())
}

/// Left whitener `W` with `W Sigma W^T = I`.
fn left_whitener(m: &DMatrix<f64>, name: &str, factor: Factorization) -> Result<DMatrix<f64>> {
    match factor {
        Factorization::Cholesky => {
            let l = check_spd(m, name)?.l();
            let n = l.nrows();
            l.solve_lower_triangular(&DMatrix::identity(n, n))
                .ok_or_else(|| Error::NotPositiveDefinite(format!("{name} factor is singular")))
        }
        Factorization::Eigen => inverse_sqrt(m, name),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum WhitenerKind {
    White { inv_sigma: f64 },
    /// `x -> ws x wt`, with `wt^T Sigma_t wt = I`.
    Kronecker { ws: DMatrix<f64>, wt: DMatrix<f64> },
    Full { w: DMatrix<f64> },
}

/// Precomputed whitening operator for repeated use.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitener {
    kind: WhitenerKind,
}

impl Whitener {
    pub fn new(model: &NoiseModel, factor: Factorization) -> Result<Self> {
        model.validate()?;
        let kind = match model {
            NoiseModel::White { variance } => WhitenerKind::White { inv_sigma: 1.0 / variance.sqrt() },
            NoiseModel::Kronecker { spatial, temporal } => WhitenerKind::Kronecker {
                ws: left_whitener(spatial, "spatial covariance", factor)?,
                // Right multiplication needs the transpose of the left whitener.
                wt: left_whitener(temporal, "temporal covariance", factor)?.transpose(),
            },
            NoiseModel::Full { covariance } => WhitenerKind::Full { w: left_whitener(covariance, "covariance", factor)? },
        };
        Ok(Self { kind })
    }

    /// Whitens an observation and maps the raw basis `F` accordingly.
    pub fn apply(&self, x: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<Whitened> {
        if x.ncols() != f.ncols() {
            return Err(shape("observation and basis sample counts differ"));
        }
        match &self.kind {
            WhitenerKind::White { inv_sigma } => Ok(Whitened::Matrix { x: x * *inv_sigma, basis: f.clone() }),
            WhitenerKind::Kronecker { ws, wt } => {
                if ws.nrows() != x.nrows() || wt.nrows() != x.ncols() {
                    return Err(shape("Kronecker factors do not match the observation"));
                }
                Ok(Whitened::Matrix { x: ws * x * wt, basis: f * wt })
            }
            WhitenerKind::Full { w } => {
                let (d, k) = x.shape();
                if w.nrows() != d * k {
                    return Err(shape("covariance does not match the observation"));
                }
                let r = f.nrows();
                let v = DVector::from_iterator(d * k, x.transpose().iter().copied());
                // Row stacking: vec(x) = (I_d (x) F^T) vec(A).
                let mut design = DMatrix::zeros(d * k, d * r);
                for i in 0..d {
                    design.view_mut((i * k, i * r), (k, r)).copy_from(&f.transpose());
                }
                Ok(Whitened::Vector { y: w * v, design: w * design })
            }
        }
    }
}

/// Whitened observation with the correspondingly transformed basis.
#[derive(Debug, Clone, PartialEq)]
pub enum Whitened {
    /// `d x K` observation and `r x K` basis.
    Matrix { x: DMatrix<f64>, basis: DMatrix<f64> },
    /// Vectorized observation and `dK x dr` design matrix.
    Vector { y: DVector<f64>, design: DMatrix<f64> },
}

impl Whitened {
    /// GLRT energy using the pseudo-inverse of the whitened basis.
    pub fn statistic(&self) -> Result<f64> {
        match self {
            Whitened::Matrix { x, basis } => Receiver::pseudo_inverse(0, basis)?.statistic(x),
            Whitened::Vector { y, design } => {
                let chol = gram_cholesky(&design.transpose())?;
                let hty = design.transpose() * y;
                let beta = chol.solve(&hty);
                Ok(hty.dot(&beta))
            }
        }
    }

    /// GLRT energy after Gram–Schmidt of the whitened basis.
    pub fn statistic_gram_schmidt(&self) -> Result<f64> {
        match self {
            Whitened::Matrix { x, basis } => Ok((x * gram_schmidt(basis)?.transpose()).norm_squared()),
            Whitened::Vector { y, design } => {
                let q = gram_schmidt(&design.transpose())?;
                Ok((q * y).norm_squared())
            }
        }
    }
}

/// One-shot whitening of `x` and the raw basis `f`.
pub fn whiten(x: &DMatrix<f64>, model: &NoiseModel, f: &DMatrix<f64>, factor: Factorization) -> Result<Whitened> {
    Whitener::new(model, factor)?.apply(x, f)
}

const NESTING_TOL: f64 = 1e-8;

/// Orthonormal rows spanning the part of `upper`'s row span orthogonal to
/// `lower`'s; requires the spans to be nested.
pub fn complement_basis(lower: &DMatrix<f64>, upper: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if lower.ncols() != upper.ncols() {
        return Err(shape("bases have different sample counts"));
    }
    if lower.nrows() >= upper.nrows() {
        return Err(domain("lower basis must have fewer rows than upper basis"));
    }
    let count = upper.nrows() - lower.nrows();
    let k = upper.ncols();
    let mut basis: Vec<DVector<f64>> = gram_schmidt(lower)?.row_iter().map(|r| r.transpose()).collect();
    let n_lower = basis.len();
    let mut residuals: Vec<DVector<f64>> = upper.row_iter().map(|r| r.transpose()).collect();
    let norms: Vec<f64> = residuals.iter().map(|r| r.norm().max(f64::MIN_POSITIVE)).collect();
    let orthogonalize = |v: &mut DVector<f64>, against: &[DVector<f64>]| {
        for _ in 0..2 {
            for q in against {
                let p = q.dot(v);
                v.axpy(-p, q, 1.0);
            }
        }
    };
    for r in residuals.iter_mut() {
        orthogonalize(r, &basis);
    }
    for _ in 0..count {
        let (idx, rel) = residuals
            .iter()
            .zip(&norms)
            .map(|(r, n)| r.norm() / n)
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("upper basis is non-empty");
        if rel < NESTING_TOL {
            return Err(Error::Rank("upper basis does not add enough new directions".into()));
        }
        let q = residuals[idx].normalize();
        for r in residuals.iter_mut() {
            orthogonalize(r, std::slice::from_ref(&q));
        }
        basis.push(q);
    }
    let leftover = residuals.iter().zip(&norms).map(|(r, n)| r.norm() / n).fold(0.0, f64::max);
    if leftover > NESTING_TOL * 1e2 {
        return Err(Error::Rank(format!("row spans are not nested (residual {leftover:.2e})")));
    }
    let mut out = DMatrix::zeros(count, k);
    for (i, q) in basis[n_lower..].iter().enumerate() {
        out.set_row(i, &q.transpose());
    }
    Ok(out)
}

/// Receivers for orders `1..=max_order` on one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverBank {
    receivers: Vec<Receiver>,
}

impl ReceiverBank {
    pub fn new(geom: &TrajectoryGeometry, max_order: usize, kind: BasisKind) -> Result<Self> {
        if max_order == 0 {
            return Err(domain("maximum order must be at least 1"));
        }
        let receivers = (1..=max_order)
            .map(|m| Receiver::from_basis(&sample_basis(m, geom, kind)?))
            .collect::<Result<_>>()?;
        Ok(Self { receivers })
    }

    pub fn max_order(&self) -> usize {
        self.receivers.len()
    }

    pub fn receiver(&self, order: usize) -> Option<&Receiver> {
        order.checked_sub(1).and_then(|i| self.receivers.get(i))
    }

    /// Unnormalized energies for orders `1..=max_order`.
    pub fn statistics(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.receivers.iter().map(|r| r.statistic(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum WhitenedOp {
    /// `x -> left x right`, flattened column-major.
    Matrix { left: Option<DMatrix<f64>>, right: DMatrix<f64> },
    /// `x -> map vec_row(x)`.
    Vector { map: DMatrix<f64> },
}

/// Receiver fused with noise whitening; its statistic is already
/// normalized so that it follows `chi^2_nu` under H0.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedReceiver {
    order: usize,
    kind: BasisKind,
    d: usize,
    samples: usize,
    op: WhitenedOp,
}

impl WhitenedReceiver {
    pub fn new(basis: &SampledBasisMatrix, model: &NoiseModel, d: usize, factor: Factorization) -> Result<Self> {
        let k = basis.rows().ncols();
        model.validate()?;
        model.check_shape(d, k)?;
        let op = match model {
            NoiseModel::White { variance } => {
                let rx = Receiver::from_basis(basis)?;
                WhitenedOp::Matrix { left: None, right: rx.transform() / variance.sqrt() }
            }
            NoiseModel::Kronecker { spatial, temporal } => {
                let ws = left_whitener(spatial, "spatial covariance", factor)?;
                let wt = left_whitener(temporal, "temporal covariance", factor)?.transpose();
                let q = gram_schmidt(&(basis.rows() * &wt))?;
                WhitenedOp::Matrix { left: Some(ws), right: wt * q.transpose() }
            }
            NoiseModel::Full { covariance } => {
                let w = left_whitener(covariance, "covariance", factor)?;
                let f = basis.rows();
                let r = f.nrows();
                let mut design = DMatrix::zeros(d * k, d * r);
                for i in 0..d {
                    design.view_mut((i * k, i * r), (k, r)).copy_from(&f.transpose());
                }
                let q = gram_schmidt(&(&w * design).transpose())?;
                WhitenedOp::Vector { map: q * w }
            }
        };
        Ok(Self { order: basis.order(), kind: basis.kind(), d, samples: k, op })
    }

    pub fn order(&self) -> usize {
        self.order
    }
    pub fn kind(&self) -> BasisKind {
        self.kind
    }
    pub fn dof(&self) -> u32 {
        (self.d * (2 * self.order + 1)) as u32
    }

    /// Whitened receiver coordinates of `x`; linear in `x`.
    pub fn project(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.shape() != (self.d, self.samples) {
            return Err(shape(format!("observation is {}x{}, receiver expects {}x{}", x.nrows(), x.ncols(), self.d, self.samples)));
        }
        Ok(match &self.op {
            WhitenedOp::Matrix { left, right } => {
                let y = match left {
                    Some(l) => l * x * right,
                    None => x * right,
                };
                DVector::from_column_slice(y.as_slice())
            }
            WhitenedOp::Vector { map } => map * DVector::from_iterator(self.d * self.samples, x.transpose().iter().copied()),
        })
    }

    pub fn statistic(&self, x: &DMatrix<f64>) -> Result<f64> {
        Ok(self.project(x)?.norm_squared())
    }
}
