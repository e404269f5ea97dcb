//! Multipolar magnetostatic fields and the noise-free trajectory signal.
//!
//! Fields are expressed in units where `mu0 / 4pi = 1` unless a model is
//! built with [`Units::Physical`]. Legendre functions are the plain
//! associated ones, without the Condon–Shortley phase.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{domain, shape, Error, Result};
use crate::mobf::{sample_basis, BasisKind};

/// `mu0 / 4pi` in SI units.
pub const MU0_OVER_4PI: f64 = 1e-7;

/// Scale convention for potentials and fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    #[default]
    Normalized,
    Physical,
}

impl Units {
    pub fn prefactor(self) -> f64 {
        match self {
            Units::Normalized => 1.0,
            Units::Physical => MU0_OVER_4PI,
        }
    }
}

/// Spherical-harmonic coefficients of a single multipolar order `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoefficients {
    order: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl HarmonicCoefficients {
    /// `a` holds `a_l0..a_ll`; `b` holds `b_l1..b_ll`.
    pub fn new(order: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(domain("harmonic order must be at least 1"));
        }
        if a.len() != order + 1 || b.len() != order {
            return Err(shape(format!(
                "order {order} needs {} a-coefficients and {order} b-coefficients, got {} and {}",
                order + 1,
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(domain("harmonic coefficients must be finite"));
        }
        Ok(Self { order, a, b })
    }

    pub fn zeros(order: usize) -> Result<Self> {
        Self::new(order, vec![0.0; order + 1], vec![0.0; order])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn a(&self, m: usize) -> f64 {
        self.a[m]
    }

    /// `b_l0` is identically zero.
    pub fn b(&self, m: usize) -> f64 {
        if m == 0 {
            0.0
        } else {
            self.b[m - 1]
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            order: self.order,
            a: self.a.iter().map(|v| v * factor).collect(),
            b: self.b.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Symmetric traceless Cartesian tensor of order `l`, stored flat in
/// row-major index order (`3^l` components).
#[derive(Debug, Clone, PartialEq)]
pub struct MultipoleTensor {
    order: usize,
    components: Vec<f64>,
}

const TENSOR_TOL: f64 = 1e-12;

fn flat_index(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * 3 + i)
}

fn unflatten(mut flat: usize, order: usize) -> Vec<usize> {
    let mut idx = vec![0; order];
    for slot in idx.iter_mut().rev() {
        *slot = flat % 3;
        flat /= 3;
    }
    idx
}

impl MultipoleTensor {
    pub fn new(order: usize, components: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(domain("tensor order must be at least 1"));
        }
        let len = 3usize.pow(order as u32);
        if components.len() != len {
            return Err(shape(format!(
                "order-{order} tensor needs {len} components, got {}",
                components.len()
            )));
        }
        if components.iter().any(|v| !v.is_finite()) {
            return Err(domain("tensor components must be finite"));
        }
        let scale = components.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let tol = TENSOR_TOL * scale;
        for flat in 0..len {
            let idx = unflatten(flat, order);
            for p in 0..order.saturating_sub(1) {
                let mut sw = idx.clone();
                sw.swap(p, p + 1);
                if (components[flat] - components[flat_index(&sw)]).abs() > tol {
                    return Err(domain(format!("tensor is not symmetric at index {idx:?}")));
                }
            }
        }
        if order >= 2 {
            // Symmetry makes one index pair sufficient.
            for rest in 0..3usize.pow(order as u32 - 2) {
                let tail = unflatten(rest, order - 2);
                let trace: f64 = (0..3)
                    .map(|i| {
                        let mut idx = vec![i, i];
                        idx.extend_from_slice(&tail);
                        components[flat_index(&idx)]
                    })
                    .sum();
                if trace.abs() > tol * 3.0 {
                    return Err(domain(format!("tensor is not traceless (trace {trace:.3e})")));
                }
            }
        }
        Ok(Self { order, components })
    }

    pub fn dipole(m: [f64; 3]) -> Result<Self> {
        Self::new(1, m.to_vec())
    }

    /// Quadrupole tensor from a row-major 3x3 matrix.
    pub fn quadrupole(m: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(2, m.iter().flatten().copied().collect())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.components[flat_index(idx)]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            order: self.order,
            components: self.components.iter().map(|v| v * factor).collect(),
        }
    }
}

/// One multipolar order of a source, in either parameterization.
#[derive(Debug, Clone, PartialEq)]
pub enum MultipoleSource {
    Harmonic(HarmonicCoefficients),
    Tensor(MultipoleTensor),
}

impl MultipoleSource {
    pub fn order(&self) -> usize {
        match self {
            MultipoleSource::Harmonic(h) => h.order(),
            MultipoleSource::Tensor(t) => t.order(),
        }
    }

    /// Field in normalized units.
    pub fn field(&self, point: &Vector3<f64>) -> Result<Vector3<f64>> {
        match self {
            MultipoleSource::Harmonic(h) => field_from_harmonics(h, point),
            MultipoleSource::Tensor(t) => field_from_tensor(t, point),
        }
    }
}

/// `T[m] = d^m/dx^m P_l(x)` for `m = 0..=l`, so that `P_l^m = s^m T[m]`.
fn legendre_derivatives(l: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; l + 2];
    let mut dfact = 1.0;
    for (m, slot) in out.iter_mut().enumerate().take(l + 1) {
        if m > 0 {
            dfact *= (2 * m - 1) as f64;
        }
        let mut prev = dfact;
        if m == l {
            *slot = prev;
            continue;
        }
        let mut cur = x * (2 * m + 1) as f64 * dfact;
        for k in m + 1..l {
            let next = ((2 * k + 1) as f64 * x * cur - (k + m) as f64 * prev) / (k - m + 1) as f64;
            prev = cur;
            cur = next;
        }
        *slot = cur;
    }
    out
}

/// Plain associated Legendre function `P_l^m(x)` for `x = cos(theta)`.
pub fn associated_legendre(l: usize, m: usize, x: f64) -> Result<f64> {
    if m > l {
        return Err(domain(format!("m = {m} exceeds l = {l}")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(domain("Legendre argument must lie in [-1, 1]"));
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    Ok(s.powi(m as i32) * legendre_derivatives(l, x)[m])
}

struct Spherical {
    r: f64,
    cos_t: f64,
    sin_t: f64,
    phi: f64,
}

fn to_spherical(p: &Vector3<f64>) -> Result<Spherical> {
    let r = p.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain("evaluation point must be nonzero and finite"));
    }
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    Ok(Spherical {
        r,
        cos_t: (p.z / r).clamp(-1.0, 1.0),
        sin_t: rho / r,
        phi: p.y.atan2(p.x),
    })
}

/// Scalar potential of one order at spherical coordinates `(r, theta, phi)`.
pub fn potential_order_l(src: &HarmonicCoefficients, r: f64, theta: f64, phi: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("radius must be positive"));
    }
    let l = src.order();
    let x = theta.cos();
    let s = theta.sin().abs();
    let t = legendre_derivatives(l, x);
    let sum: f64 = (0..=l)
        .map(|m| {
            let mf = m as f64;
            (src.a(m) * (mf * phi).cos() + src.b(m) * (mf * phi).sin()) * s.powi(m as i32) * t[m]
        })
        .sum();
    Ok(r.powi(-(l as i32) - 1) * sum)
}

/// Potential at a Cartesian point.
pub fn potential_at(src: &HarmonicCoefficients, point: &Vector3<f64>) -> Result<f64> {
    let sp = to_spherical(point)?;
    potential_order_l(src, sp.r, sp.cos_t.acos(), sp.phi)
}

/// `B = -grad Psi` for one order, evaluated analytically in spherical
/// components and rotated to Cartesian.
pub fn field_from_harmonics(src: &HarmonicCoefficients, point: &Vector3<f64>) -> Result<Vector3<f64>> {
    let sp = to_spherical(point)?;
    let l = src.order();
    let (c, s) = (sp.cos_t, sp.sin_t);
    let t = legendre_derivatives(l, c);
    let (mut sum_r, mut sum_t, mut sum_p) = (0.0, 0.0, 0.0);
    for m in 0..=l {
        let mf = m as f64;
        let (sn, cs) = (mf * sp.phi).sin_cos();
        let sm = src.a(m) * cs + src.b(m) * sn;
        let dsm = mf * (-src.a(m) * sn + src.b(m) * cs);
        let p = s.powi(m as i32) * t[m];
        // dP/dtheta = m c s^(m-1) T_m - s^(m+1) T_(m+1)
        let lead = if m == 0 { 0.0 } else { mf * c * s.powi(m as i32 - 1) * t[m] };
        let dp = lead - s.powi(m as i32 + 1) * t[m + 1];
        sum_r += sm * p;
        sum_t += sm * dp;
        if m > 0 {
            // P/sin(theta) stays finite at the poles.
            sum_p += dsm * s.powi(m as i32 - 1) * t[m];
        }
    }
    let k = sp.r.powi(-(l as i32) - 2);
    let br = (l + 1) as f64 * k * sum_r;
    let bt = -k * sum_t;
    let bp = -k * sum_p;
    let (sphi, cphi) = sp.phi.sin_cos();
    let e_r = Vector3::new(s * cphi, s * sphi, c);
    let e_t = Vector3::new(c * cphi, c * sphi, -s);
    let e_p = Vector3::new(-sphi, cphi, 0.0);
    Ok(e_r * br + e_t * bt + e_p * bp)
}

/// `M = (m contracted with u_r over l-1 indices) / l!`.
pub fn radial_moment(t: &MultipoleTensor, r_vec: &Vector3<f64>) -> Result<Vector3<f64>> {
    let r = r_vec.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain("radial vector must be nonzero and finite"));
    }
    let u = r_vec / r;
    // Contract the trailing index repeatedly: shape 3^k -> 3^(k-1).
    let mut cur = t.components().to_vec();
    for _ in 1..t.order() {
        cur = cur.chunks(3).map(|c| c[0] * u.x + c[1] * u.y + c[2] * u.z).collect();
    }
    let fact: f64 = (1..=t.order()).map(|k| k as f64).product();
    Ok(Vector3::new(cur[0], cur[1], cur[2]) / fact)
}

/// `B = [(2l+1)(r.M) r - l r^2 M] / r^(l+4)`.
pub fn field_from_tensor(t: &MultipoleTensor, point: &Vector3<f64>) -> Result<Vector3<f64>> {
    let m = radial_moment(t, point)?;
    let l = t.order() as f64;
    let r2 = point.norm_squared();
    let r = r2.sqrt();
    Ok((point * ((2.0 * l + 1.0) * point.dot(&m)) - m * (l * r2)) / r.powi(t.order() as i32 + 4))
}

fn check_orders(srcs: &[MultipoleSource]) -> Result<()> {
    let mut seen = Vec::new();
    for s in srcs {
        if seen.contains(&s.order()) {
            return Err(Error::Config(format!("order {} appears more than once", s.order())));
        }
        seen.push(s.order());
    }
    Ok(())
}

/// Sum of per-order fields, normalized units.
pub fn total_field(srcs: &[MultipoleSource], point: &Vector3<f64>) -> Result<Vector3<f64>> {
    check_orders(srcs)?;
    srcs.iter().try_fold(Vector3::zeros(), |acc, s| Ok(acc + s.field(point)?))
}

/// Linear constant-speed pass by a source at the origin, observed by a
/// `d`-axis sensor through the projection `Pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryGeometry {
    speed: f64,
    cpa_distance: f64,
    cpa_time: f64,
    beta: f64,
    projection: DMatrix<f64>,
    samples: usize,
    window: f64,
}

impl TrajectoryGeometry {
    pub fn new(
        speed: f64,
        cpa_distance: f64,
        cpa_time: f64,
        beta: f64,
        projection: DMatrix<f64>,
        samples: usize,
        window: f64,
    ) -> Result<Self> {
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(Error::Config("speed V must be positive".into()));
        }
        if !(cpa_distance > 0.0) || !cpa_distance.is_finite() {
            return Err(Error::Config("CPA distance D must be positive".into()));
        }
        if !(window > 0.0) || !window.is_finite() {
            return Err(Error::Config("window R must be positive".into()));
        }
        if samples < 2 {
            return Err(Error::Config("sample count K must be at least 2".into()));
        }
        if !cpa_time.is_finite() || !beta.is_finite() {
            return Err(Error::Config("t0 and beta must be finite".into()));
        }
        let d = projection.nrows();
        if projection.ncols() != 3 || !(1..=3).contains(&d) {
            return Err(Error::Config(format!(
                "projection Pi must be d x 3 with d in 1..=3, got {}x{}",
                d,
                projection.ncols()
            )));
        }
        if projection.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("projection Pi must be finite".into()));
        }
        Ok(Self { speed, cpa_distance, cpa_time, beta, projection, samples, window })
    }

    /// V = 85 m/s, D = 100 m, K = 1001, R = 20, triaxial sensor.
    pub fn pseudo_operational(beta: f64) -> Self {
        Self::new(85.0, 100.0, 0.0, beta, DMatrix::identity(3, 3), 1001, 20.0)
            .expect("defaults are valid")
    }

    pub fn with_projection(mut self, projection: DMatrix<f64>) -> Result<Self> {
        self.projection = projection;
        Self::new(self.speed, self.cpa_distance, self.cpa_time, self.beta, self.projection, self.samples, self.window)
    }

    pub fn with_grid(self, samples: usize, window: f64) -> Result<Self> {
        Self::new(self.speed, self.cpa_distance, self.cpa_time, self.beta, self.projection, samples, window)
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }
    pub fn cpa_distance(&self) -> f64 {
        self.cpa_distance
    }
    pub fn cpa_time(&self) -> f64 {
        self.cpa_time
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }
    pub fn samples(&self) -> usize {
        self.samples
    }
    pub fn window(&self) -> f64 {
        self.window
    }
    pub fn sensor_dim(&self) -> usize {
        self.projection.nrows()
    }

    /// Grid spacing `R / (K - 1)`.
    pub fn step(&self) -> f64 {
        self.window / (self.samples - 1) as f64
    }

    pub fn grid_point(&self, k: usize) -> f64 {
        -0.5 * self.window + k as f64 * self.step()
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.samples).map(|k| self.grid_point(k)).collect()
    }

    /// Sample time of normalized abscissa `u`.
    pub fn time(&self, u: f64) -> f64 {
        self.cpa_time + u * self.cpa_distance / self.speed
    }

    /// Sensor position `(D u, -D sin(beta), D cos(beta))` in source coordinates.
    pub fn position(&self, u: f64) -> Vector3<f64> {
        let d = self.cpa_distance;
        Vector3::new(d * u, -d * self.beta.sin(), d * self.beta.cos())
    }
}

/// Noise-free `d x K` signal on a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    values: DMatrix<f64>,
    geometry: TrajectoryGeometry,
}

impl SampledSignal {
    pub fn new(values: DMatrix<f64>, geometry: TrajectoryGeometry) -> Result<Self> {
        if values.nrows() != geometry.sensor_dim() || values.ncols() != geometry.samples() {
            return Err(shape(format!(
                "signal is {}x{}, geometry expects {}x{}",
                values.nrows(),
                values.ncols(),
                geometry.sensor_dim(),
                geometry.samples()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("signal entries must be finite"));
        }
        Ok(Self { values, geometry })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
    pub fn geometry(&self) -> &TrajectoryGeometry {
        &self.geometry
    }
    pub fn energy(&self) -> f64 {
        self.values.norm_squared()
    }
    pub fn scaled(&self, factor: f64) -> Self {
        Self { values: &self.values * factor, geometry: self.geometry.clone() }
    }
    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

/// Sources plus a unit convention.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceModel {
    pub sources: Vec<MultipoleSource>,
    pub units: Units,
}

impl SourceModel {
    pub fn new(sources: Vec<MultipoleSource>, units: Units) -> Result<Self> {
        check_orders(&sources)?;
        Ok(Self { sources, units })
    }

    pub fn field(&self, point: &Vector3<f64>) -> Result<Vector3<f64>> {
        Ok(total_field(&self.sources, point)? * self.units.prefactor())
    }

    pub fn signal(&self, geom: &TrajectoryGeometry) -> Result<SampledSignal> {
        Ok(signal_on_trajectory(&self.sources, geom)?.scaled(self.units.prefactor()))
    }
}

/// Samples `Pi B(P(u_k))` on the trajectory grid, normalized units.
pub fn signal_on_trajectory(srcs: &[MultipoleSource], geom: &TrajectoryGeometry) -> Result<SampledSignal> {
    check_orders(srcs)?;
    let mut fields = DMatrix::zeros(3, geom.samples());
    for k in 0..geom.samples() {
        let b = total_field(srcs, &geom.position(geom.grid_point(k)))?;
        fields.set_column(k, &b);
    }
    SampledSignal::new(geom.projection() * fields, geom.clone())
}

/// `u^n / (1 + u^2)^(L + 3/2)`.
pub fn f_basis(order: usize, n: usize, u: f64) -> Result<f64> {
    if order == 0 || n > 2 * order {
        return Err(domain(format!("f_(L={order}, n={n}) needs L >= 1 and n <= 2L")));
    }
    Ok(u.powi(n as i32) / (1.0 + u * u).powf(order as f64 + 1.5))
}

/// Fraction of the signal energy captured by the orthogonal projection onto
/// `basis` (rows orthonormal).
pub fn energy_fraction(sig: &DMatrix<f64>, basis: &DMatrix<f64>) -> Result<f64> {
    if sig.ncols() != basis.ncols() {
        return Err(shape("signal and basis sample counts differ"));
    }
    let total = sig.norm_squared();
    if !(total > 0.0) {
        return Err(domain("signal energy is zero"));
    }
    Ok((sig * basis.transpose()).norm_squared() / total)
}

/// Energy fractions captured by the signal spaces of orders `1..=max_order`.
pub fn subspace_energy_fractions(sig: &SampledSignal, max_order: usize) -> Result<Vec<f64>> {
    if max_order == 0 {
        return Err(domain("maximum order must be at least 1"));
    }
    if !(sig.energy() > 0.0) {
        return Err(domain("signal energy is zero"));
    }
    let mut out = Vec::with_capacity(max_order);
    for j in 1..=max_order {
        let b = sample_basis(j, sig.geometry(), BasisKind::MobfReorthonormalized)?;
        let frac = energy_fraction(sig.values(), b.rows())?.min(1.0);
        // Nested spans; guard against rounding only.
        let prev = out.last().copied().unwrap_or(0.0);
        out.push(frac.max(prev));
    }
    Ok(out)
}

/// Rotation about the x axis by `beta`, mapping `(0, 0, 1)` to
/// `(0, -sin beta, cos beta)`.
pub fn rotation_about_x(beta: f64) -> Matrix3<f64> {
    let (s, c) = beta.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}
