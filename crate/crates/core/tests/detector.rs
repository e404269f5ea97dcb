mod common;

use common::{chi2_cdf_oracle, gaussian_matrix, ks_statistic, ncx2_ccdf_oracle, rel};
use madkit::detector::*;
use madkit::field::{SampledSignal, TrajectoryGeometry};
use madkit::harness::ar1_covariance;
use madkit::mobf::{gram_schmidt, sample_basis, BasisKind};
use madkit::performance::threshold_for_pfa;
use madkit::Error;
use nalgebra::{DMatrix, Rotation3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn geometry(samples: usize) -> TrajectoryGeometry {
    TrajectoryGeometry::pseudo_operational(0.3).with_grid(samples, 20.0).unwrap()
}

fn rows(order: usize, g: &TrajectoryGeometry, kind: BasisKind) -> DMatrix<f64> {
    sample_basis(order, g, kind).unwrap().into_rows()
}

#[test]
fn pseudo_inverse_identities() {
    let f = rows(3, &geometry(201), BasisKind::Raw);
    let p = pseudo_inverse(&f).unwrap();
    let n = f.nrows();
    assert!((&f * &p - DMatrix::<f64>::identity(n, n)).amax() < 1e-9);
    let proj = &p * &f;
    assert!((&proj - proj.transpose()).amax() < 1e-10);
    assert!((&proj * &proj - &proj).amax() < 1e-10);
}

#[test]
fn ill_conditioned_and_rank_deficient_bases_are_rejected() {
    let mut f = rows(2, &geometry(201), BasisKind::RawOrthonormalized);
    let r0 = f.row(0).clone_owned();
    let r1 = f.row(1).clone_owned();
    f.set_row(4, &(&r0 + &r1 * 1e-9 + f.row(4) * 1e-9));
    assert!(matches!(pseudo_inverse(&f), Err(Error::IllConditioned(c)) if c > MAX_CONDITION));
    let wide = DMatrix::<f64>::zeros(5, 3);
    assert!(matches!(pseudo_inverse(&wide), Err(Error::Rank(_))));
}

#[test]
fn raw_and_orthonormal_receivers_agree() {
    let g = geometry(1001);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for order in 1..=4 {
        let raw = Receiver::from_basis(&sample_basis(order, &g, BasisKind::Raw).unwrap()).unwrap();
        let fgs = Receiver::from_basis(&sample_basis(order, &g, BasisKind::RawOrthonormalized).unwrap()).unwrap();
        let ggs = Receiver::from_basis(&sample_basis(order, &g, BasisKind::MobfReorthonormalized).unwrap()).unwrap();
        let mobf = Receiver::from_basis(&sample_basis(order, &g, BasisKind::Mobf).unwrap()).unwrap();
        for _ in 0..5 {
            let x = gaussian_matrix(3, 1001, &mut rng);
            let t = fgs.statistic(&x).unwrap();
            assert!(rel(raw.statistic(&x).unwrap(), t) < 1e-10);
            assert!(rel(ggs.statistic(&x).unwrap(), t) < 1e-10);
            // Analytical rows are orthonormal only up to sampling error.
            assert!(rel(mobf.statistic(&x).unwrap(), t) < 1e-2);
        }
    }
}

#[test]
fn coefficient_route_matches_receiver_transform() {
    let g = geometry(301);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = gaussian_matrix(3, 301, &mut rng);
    let raw = sample_basis(2, &g, BasisKind::Raw).unwrap();
    let a = estimate_coefficients(&x, &raw).unwrap();
    let via_coeffs = energy_statistic_raw(&a, raw.rows()).unwrap();
    let via_rx = Receiver::from_basis(&raw).unwrap().statistic(&x).unwrap();
    assert!(rel(via_coeffs, via_rx) < 1e-12);

    let q = sample_basis(2, &g, BasisKind::RawOrthonormalized).unwrap();
    let aq = estimate_coefficients(&x, &q).unwrap();
    assert!(rel(energy_statistic(&aq), via_rx) < 1e-10);
    assert!(matches!(estimate_coefficients(&gaussian_matrix(3, 300, &mut rng), &q), Err(Error::Shape(_))));
}

#[test]
fn coefficients_of_pure_noise_have_the_noise_variance() {
    let g = geometry(201);
    let q = sample_basis(2, &g, BasisKind::RawOrthonormalized).unwrap();
    let sigma2: f64 = 2.5;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let trials = 4000;
    let mut sum = DMatrix::<f64>::zeros(3, 5);
    let mut sq = DMatrix::<f64>::zeros(3, 5);
    for _ in 0..trials {
        let a = estimate_coefficients(&(gaussian_matrix(3, 201, &mut rng) * sigma2.sqrt()), &q).unwrap();
        sum += &a;
        sq += a.component_mul(&a);
    }
    let n = trials as f64;
    for (s, s2) in sum.iter().zip(sq.iter()) {
        let mean = s / n;
        let var = s2 / n - mean * mean;
        assert!(mean.abs() < 4.0 * (sigma2 / n).sqrt());
        // Var of the sample variance is about 2 sigma^4 / n.
        assert!((var - sigma2).abs() < 5.0 * sigma2 * (2.0 / n).sqrt(), "var {var}");
    }
}

#[test]
fn null_statistic_is_central_chi_squared() {
    let g = geometry(1001);
    let order = 2;
    let rx = Receiver::from_basis(&sample_basis(order, &g, BasisKind::RawOrthonormalized).unwrap()).unwrap();
    let sigma2: f64 = 0.7;
    let nu = 15.0;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let stats: Vec<f64> =
        (0..20000).map(|_| rx.statistic(&(gaussian_matrix(3, 1001, &mut rng) * sigma2.sqrt())).unwrap() / sigma2).collect();
    let n = stats.len() as f64;
    let mean = stats.iter().sum::<f64>() / n;
    let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - nu).abs() < 4.0 * (2.0 * nu / n).sqrt());
    assert!((var / (2.0 * nu) - 1.0).abs() < 0.05);
    assert!(ks_statistic(&stats, |x| chi2_cdf_oracle(nu, x)) < 0.015);
}

#[test]
fn signal_statistic_is_noncentral_chi_squared() {
    let g = geometry(1001);
    let q = sample_basis(1, &g, BasisKind::RawOrthonormalized).unwrap();
    let rx = Receiver::from_basis(&q).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let coeffs = gaussian_matrix(3, 3, &mut rng);
    let s = &coeffs * q.rows();
    let stats = receiver_stats(&SampledSignal::new(s.clone(), g.clone()).unwrap(), &q, 1.0).unwrap();
    assert_eq!(stats.nu, 9);
    assert!(rel(stats.lambda, coeffs.norm_squared()) < 1e-10);
    let samples: Vec<f64> = (0..20000).map(|_| rx.statistic(&(&s + gaussian_matrix(3, 1001, &mut rng))).unwrap()).collect();
    let d = ks_statistic(&samples, |x| 1.0 - ncx2_ccdf_oracle(9.0, stats.lambda, x));
    assert!(d < 0.015, "KS {d}");
}

#[test]
fn threshold_achieves_its_false_alarm_rate() {
    let g = geometry(501);
    let rx = Receiver::from_basis(&sample_basis(3, &g, BasisKind::RawOrthonormalized).unwrap()).unwrap();
    let sigma2: f64 = 3.0;
    let pfa = 0.05;
    let eta = sigma2 * threshold_for_pfa(21, pfa).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let trials = 20000;
    let alarms = (0..trials)
        .filter(|_| decide(rx.statistic(&(gaussian_matrix(3, 501, &mut rng) * sigma2.sqrt())).unwrap(), eta) == Hypothesis::H1)
        .count();
    let p = alarms as f64 / trials as f64;
    assert!((p - pfa).abs() < 3.0 * (pfa * (1.0 - pfa) / trials as f64).sqrt(), "empirical pfa {p}");
}

#[test]
fn decision_ties_go_to_the_null() {
    assert_eq!(decide(2.0, 2.0), Hypothesis::H0);
    assert_eq!(decide(2.0 + 1e-12, 2.0), Hypothesis::H1);
    assert_eq!(decide(0.0, 0.5), Hypothesis::H0);
}

#[test]
fn receiver_statistics_examples() {
    let s = ReceiverStatistics::new(4, 3, 100.0).unwrap();
    assert_eq!(s.nu, 27);
    assert_eq!(s.null_law().lambda(), 0.0);
    assert_eq!(s.alternative_law().lambda(), 100.0);
    assert!(s.pd(1e-2).unwrap() > 0.01);
    assert!(ReceiverStatistics::new(0, 3, 1.0).is_err());
    assert!(ReceiverStatistics::new(1, 3, -1.0).is_err());
    assert!(ReceiverStatistics::new(1, 3, f64::NAN).is_err());
}

#[test]
fn observations_must_be_finite() {
    let mut x = DMatrix::<f64>::zeros(3, 4);
    assert!(Observation::new(x.clone()).is_ok());
    x[(1, 2)] = f64::NAN;
    assert!(matches!(Observation::new(x), Err(Error::Domain(_))));
    let t = Observation::tagged(DMatrix::zeros(1, 2), Hypothesis::H1).unwrap();
    assert_eq!(t.hypothesis, Some(Hypothesis::H1));
}

#[test]
fn noise_models_are_validated() {
    assert!(NoiseModel::white(0.0).is_err());
    assert!(NoiseModel::white(f64::INFINITY).is_err());
    let bad = NoiseModel::Kronecker {
        spatial: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
        temporal: DMatrix::identity(3, 3),
    };
    assert!(matches!(bad.validate(), Err(Error::NotPositiveDefinite(_))));
    let asym = NoiseModel::Full { covariance: DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]) };
    assert!(matches!(asym.validate(), Err(Error::NotPositiveDefinite(_))));
    let ok = NoiseModel::Kronecker { spatial: DMatrix::identity(2, 2), temporal: DMatrix::identity(3, 3) };
    assert!(ok.check_shape(2, 3).is_ok());
    assert!(matches!(ok.check_shape(3, 3), Err(Error::Shape(_))));
}

#[test]
fn white_whitening_reduces_to_scaling() {
    let g = geometry(301);
    let f = rows(2, &g, BasisKind::Raw);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x = gaussian_matrix(3, 301, &mut rng);
    let sigma2 = 4.0;
    let plain = Receiver::pseudo_inverse(2, &f).unwrap().statistic(&x).unwrap() / sigma2;
    let w = whiten(&x, &NoiseModel::white(sigma2).unwrap(), &f, Factorization::Cholesky).unwrap();
    assert!(rel(w.statistic().unwrap(), plain) < 1e-10);
    assert!(rel(w.statistic_gram_schmidt().unwrap(), plain) < 1e-10);
}

fn colored_model(d: usize, k: usize) -> NoiseModel {
    let spatial = DMatrix::from_fn(d, d, |i, j| if i == j { 2.0 } else { 0.6 });
    NoiseModel::Kronecker { spatial, temporal: ar1_covariance(k, 0.5, 1.0) }
}

/// Colored draw `Ls Z Lt^T` built in the test from its own factors.
fn colored_draw(model: &NoiseModel, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let NoiseModel::Kronecker { spatial, temporal } = model else { unreachable!() };
    let ls = spatial.clone().cholesky().unwrap().l();
    let lt = temporal.clone().cholesky().unwrap().l();
    ls * gaussian_matrix(spatial.nrows(), temporal.nrows(), rng) * lt.transpose()
}

#[test]
fn whitened_noise_has_identity_covariance() {
    let (d, k) = (2, 6);
    let model = colored_model(d, k);
    let f = DMatrix::<f64>::identity(k, k);
    let w = Whitener::new(&model, Factorization::Cholesky).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let trials = 20000;
    let mut cov = DMatrix::<f64>::zeros(d * k, d * k);
    for _ in 0..trials {
        let Whitened::Matrix { x, .. } = w.apply(&colored_draw(&model, &mut rng), &f).unwrap() else { unreachable!() };
        let v = DMatrix::from_column_slice(d * k, 1, x.as_slice());
        cov += &v * v.transpose();
    }
    cov /= trials as f64;
    let err = (cov - DMatrix::<f64>::identity(d * k, d * k)).amax();
    assert!(err < 0.05, "max covariance error {err}");
}

#[test]
fn cholesky_and_eigen_whitening_agree_for_ar1_noise() {
    let g = geometry(201);
    let model = colored_model(3, 201);
    let f = rows(3, &g, BasisKind::Raw);
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..5 {
        let x = colored_draw(&model, &mut rng);
        let a = whiten(&x, &model, &f, Factorization::Cholesky).unwrap().statistic().unwrap();
        let b = whiten(&x, &model, &f, Factorization::Eigen).unwrap().statistic().unwrap();
        assert!(rel(a, b) < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn full_and_kronecker_models_agree() {
    let (d, k) = (2, 41);
    let g = geometry(k).with_projection(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
    let kron = colored_model(d, k);
    let NoiseModel::Kronecker { spatial, temporal } = &kron else { unreachable!() };
    // Row stacking puts the spatial index outermost.
    let full = NoiseModel::Full { covariance: spatial.kronecker(temporal) };
    let basis = sample_basis(2, &g, BasisKind::Raw).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for factor in [Factorization::Cholesky, Factorization::Eigen] {
        let rk = WhitenedReceiver::new(&basis, &kron, d, factor).unwrap();
        let rf = WhitenedReceiver::new(&basis, &full, d, factor).unwrap();
        assert_eq!(rk.dof(), 10);
        for _ in 0..5 {
            let x = colored_draw(&kron, &mut rng);
            let a = rk.statistic(&x).unwrap();
            let b = rf.statistic(&x).unwrap();
            let c = whiten(&x, &full, basis.rows(), factor).unwrap().statistic().unwrap();
            let e = whiten(&x, &kron, basis.rows(), factor).unwrap().statistic_gram_schmidt().unwrap();
            assert!(rel(a, b) < 1e-8 && rel(a, c) < 1e-8 && rel(a, e) < 1e-8, "{a} {b} {c} {e}");
        }
    }
}

#[test]
fn whitened_receiver_null_statistic_is_chi_squared() {
    let k = 301;
    let g = geometry(k);
    let model = colored_model(3, k);
    let rx = WhitenedReceiver::new(&sample_basis(1, &g, BasisKind::Mobf).unwrap(), &model, 3, Factorization::Cholesky).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let stats: Vec<f64> = (0..10000).map(|_| rx.statistic(&colored_draw(&model, &mut rng)).unwrap()).collect();
    assert!(ks_statistic(&stats, |x| chi2_cdf_oracle(9.0, x)) < 0.02);
    assert!(matches!(rx.statistic(&DMatrix::zeros(3, k - 1)), Err(Error::Shape(_))));
}

#[test]
fn statistic_is_invariant_to_basis_change() {
    let g = geometry(301);
    let f = rows(2, &g, BasisKind::Raw);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mix = gaussian_matrix(5, 5, &mut rng) + DMatrix::<f64>::identity(5, 5) * 3.0;
    let x = gaussian_matrix(3, 301, &mut rng);
    let a = Receiver::pseudo_inverse(2, &f).unwrap().statistic(&x).unwrap();
    let b = Receiver::pseudo_inverse(2, &(mix * &f)).unwrap().statistic(&x).unwrap();
    assert!(rel(a, b) < 1e-9);
}

#[test]
fn statistic_is_invariant_to_sensor_rotation() {
    let g = geometry(301);
    let rx = Receiver::from_basis(&sample_basis(3, &g, BasisKind::RawOrthonormalized).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let x = gaussian_matrix(3, 301, &mut rng);
    let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(0.3, -1.0, 0.4)), 1.1);
    let q = DMatrix::from_iterator(3, 3, rot.matrix().iter().copied());
    assert!(rel(rx.statistic(&(q * &x)).unwrap(), rx.statistic(&x).unwrap()) < 1e-12);
}

#[test]
fn nested_statistics_split_by_pythagoras() {
    let g = geometry(1001);
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let x = gaussian_matrix(3, 1001, &mut rng);
    for order in 2..=4 {
        let lo = rows(order - 1, &g, BasisKind::RawOrthonormalized);
        let hi = rows(order, &g, BasisKind::RawOrthonormalized);
        let c = complement_basis(&lo, &hi).unwrap();
        assert_eq!(c.nrows(), 2);
        assert!((&c * lo.transpose()).amax() < 1e-10);
        assert!((&c * c.transpose() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
        let s_lo = (&x * lo.transpose()).norm_squared();
        let s_hi = (&x * hi.transpose()).norm_squared();
        let s_c = (&x * c.transpose()).norm_squared();
        assert!(rel(s_lo + s_c, s_hi) < 1e-10);
    }
}

#[test]
fn complement_requires_nested_spans() {
    let g = geometry(301);
    let lo = rows(1, &g, BasisKind::RawOrthonormalized);
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let unrelated = gram_schmidt(&gaussian_matrix(5, 301, &mut rng)).unwrap();
    assert!(matches!(complement_basis(&lo, &unrelated), Err(Error::Rank(_))));
    assert!(complement_basis(&lo, &lo).is_err());
}

#[test]
fn receiver_bank_orders() {
    let g = geometry(301);
    let bank = ReceiverBank::new(&g, 3, BasisKind::Raw).unwrap();
    assert_eq!(bank.max_order(), 3);
    assert!(bank.receiver(0).is_none() && bank.receiver(4).is_none());
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let e = bank.statistics(&gaussian_matrix(3, 301, &mut rng)).unwrap();
    assert!(e.windows(2).all(|w| w[1] >= w[0]));
    assert!(ReceiverBank::new(&g, 0, BasisKind::Raw).is_err());
}

proptest! {
    #[test]
    fn statistic_is_quadratic_and_nonnegative(seed in any::<u64>(), c in -5.0f64..5.0) {
        let g = geometry(101);
        let rx = Receiver::from_basis(&sample_basis(2, &g, BasisKind::Raw).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian_matrix(3, 101, &mut rng);
        let s = rx.statistic(&x).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!((rx.statistic(&(&x * c)).unwrap() - c * c * s).abs() <= 1e-10 * s.max(1.0) * c * c + 1e-12);
    }

    #[test]
    fn projection_never_exceeds_observation_energy(seed in any::<u64>(), order in 1usize..=5) {
        let g = geometry(101);
        let rx = Receiver::from_basis(&sample_basis(order, &g, BasisKind::RawOrthonormalized).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian_matrix(2, 101, &mut rng) * rng.random_range(0.1..10.0);
        prop_assert!(rx.statistic(&x).unwrap() <= x.norm_squared() * (1.0 + 1e-12));
    }
}
