use madkit::field::TrajectoryGeometry;
use madkit::mobf::*;
use madkit::quad::integrate_real_line;
use madkit::Error;
use nalgebra::DMatrix;
use num_traits::ToPrimitive;
use proptest::prelude::*;

/// `(1+u^2)^(2N+3) d^n/du^n (1+u^2)^(n-2N-3)` as integer monomial
/// coefficients, by differentiating `Q(u) (1+u^2)^e` one step at a time.
fn rodrigues_monomials(order: usize, n: usize) -> Vec<i128> {
    let mut q: Vec<i128> = vec![1];
    let mut e = n as i128 - 2 * order as i128 - 3;
    for _ in 0..n {
        // d/du [Q w^e] = [Q' (1+u^2) + 2 e u Q] w^(e-1)
        let mut next = vec![0i128; q.len() + 1];
        for (j, &c) in q.iter().enumerate() {
            if j >= 1 {
                next[j - 1] += j as i128 * c;
                next[j + 1] += j as i128 * c;
            }
            next[j + 1] += 2 * e * c;
        }
        q = next;
        e -= 1;
    }
    q
}

fn table_geometry() -> TrajectoryGeometry {
    TrajectoryGeometry::pseudo_operational(0.0)
}

#[test]
fn first_order_linear_polynomial() {
    assert_eq!(d_coefficient(1, 1, 0).unwrap(), (-4).into());
    let p = mobf_polynomial(1, 1).unwrap();
    let (num, den) = p.c_squared();
    assert_eq!((num.to_i64().unwrap(), den.to_i64().unwrap()), (2, 5));
    assert!((p.c() - (2.0 / (5.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-15);
    let m: Vec<i64> = p.integer_monomials().iter().map(|v| v.to_i64().unwrap()).collect();
    assert_eq!(m, vec![0, -8]);
    for u in [-3.0, -0.2, 0.0, 1.7] {
        assert!((p.eval_polynomial(u) + 8.0 * p.c() * u).abs() < 1e-14);
    }
}

#[test]
fn expansion_matches_rodrigues_formula() {
    for order in 1..=MAX_ORDER {
        for n in 0..=2 * order {
            let p = mobf_polynomial(order, n).unwrap();
            let want = rodrigues_monomials(order, n);
            let got: Vec<i128> = p.integer_monomials().iter().map(|v| v.to_i128().unwrap()).collect();
            assert_eq!(got, want, "N={order} n={n}");
        }
    }
}

#[test]
fn normalization_matches_quadrature() {
    for order in 1..=5 {
        for n in 0..=2 * order {
            let p = mobf_polynomial(order, n).unwrap();
            let unscaled = |u: f64| p.eval(u) / p.c();
            let norm = integrate_real_line(|u| unscaled(u).powi(2), 1e-14, 1e-13);
            assert!((p.c() * p.c() * norm - 1.0).abs() < 1e-10, "N={order} n={n}");
        }
    }
}

#[test]
fn continuous_gram_is_identity() {
    for order in 1..=5 {
        let basis = MobfBasis::new(order).unwrap();
        for n in 0..=2 * order {
            for m in n..=2 * order {
                let v = integrate_real_line(|u| basis.eval(n, u) * basis.eval(m, u), 1e-13, 1e-12);
                let want = if n == m { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-8, "N={order} <{n},{m}> = {v}");
            }
        }
    }
}

#[test]
fn degree_zero_polynomial_is_constant() {
    for order in 1..=MAX_ORDER {
        let p = mobf_polynomial(order, 0).unwrap();
        assert_eq!(p.degree(), 0);
        assert_eq!(p.coefficients().len(), 1);
        assert!((p.eval_polynomial(-5.0) - p.eval_polynomial(3.0)).abs() == 0.0);
    }
}

#[test]
fn degree_and_parity_of_monomials() {
    for order in 1..=MAX_ORDER {
        for n in 0..=2 * order {
            let p = mobf_polynomial(order, n).unwrap();
            let c = p.integer_monomials();
            assert_eq!(c.len(), n + 1);
            assert!(c[n] != 0.into());
            for (j, v) in c.iter().enumerate() {
                if (n - j) % 2 == 1 {
                    assert!(*v == 0.into(), "N={order} n={n} odd-parity monomial {j}");
                }
            }
        }
    }
}

#[test]
fn leading_coefficient_closed_form_agrees() {
    for order in 1..=MAX_ORDER {
        for n in 0..=2 * order {
            let p = mobf_polynomial(order, n).unwrap();
            let closed = leading_coefficient_closed_form(order, n).unwrap();
            assert!((closed - p.leading_coefficient()).abs() <= 1e-13 * closed.abs());
            // Sign (-1)^n because the Rodrigues exponent is negative.
            assert_eq!(closed.is_sign_negative(), n % 2 == 1);
        }
    }
}

#[test]
fn each_function_has_exactly_n_sign_changes() {
    for order in 1..=5 {
        let basis = MobfBasis::new(order).unwrap();
        for n in 0..=2 * order {
            // Uniform in atan(u) so every real zero is resolved.
            let half = std::f64::consts::FRAC_PI_2;
            let vals: Vec<f64> =
                (1..20000).map(|i| basis.eval(n, (-half + i as f64 * std::f64::consts::PI / 20000.0).tan())).collect();
            // Exact zeros (odd n at u = 0) are skipped, not counted twice.
            let nonzero: Vec<f64> = vals.into_iter().filter(|v| *v != 0.0).collect();
            let changes = nonzero.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
            assert_eq!(changes, n, "N={order} n={n}");
        }
    }
}

#[test]
fn gegenbauer_low_orders() {
    let x = 0.3;
    let a = 2.5;
    assert_eq!(gegenbauer(0, a, x), 1.0);
    assert!((gegenbauer(1, a, x) - 2.0 * a * x).abs() < 1e-15);
    assert!((gegenbauer(2, a, x) - (2.0 * a * (1.0 + a) * x * x - a)).abs() < 1e-14);
}

/// Largest |g_(N,n)| on [-10, 10].
fn peak(order: usize, n: usize) -> f64 {
    (0..=2000).map(|i| mobf_eval(order, n, -10.0 + 0.01 * i as f64).unwrap().abs()).fold(0.0, f64::max)
}

#[test]
fn gegenbauer_form_matches_expansion() {
    let mut worst_rel = 0.0f64;
    let mut worst_abs = 0.0f64;
    for order in 1..=MAX_ORDER {
        for n in 0..=2 * order {
            let top = peak(order, n);
            for i in 0..=2000 {
                let u = -10.0 + 0.01 * i as f64;
                let a = mobf_eval(order, n, u).unwrap();
                let b = mobf_eval_gegenbauer(order, n, u).unwrap();
                worst_abs = worst_abs.max((a - b).abs() / top);
                if order <= 5 {
                    // Relative error, floored near the zeros of the function.
                    worst_rel = worst_rel.max((a - b).abs() / a.abs().max(1e-3 * top));
                }
            }
        }
    }
    assert!(worst_rel < 1e-12, "worst relative error {worst_rel}");
    assert!(worst_abs < 1e-13, "worst error relative to peak {worst_abs}");
}

#[test]
fn sampled_orthonormality_errors_match_published_values() {
    let g = table_geometry();
    let eps: Vec<f64> = (1..=5)
        .map(|n| orthonormality_error(sample_basis(n, &g, BasisKind::Mobf).unwrap().rows()))
        .collect();
    assert!((eps[0] / 3.95e-5 - 1.0).abs() < 0.1, "eps(G1) = {}", eps[0]);
    assert!((eps[4] / 2.55e-3 - 1.0).abs() < 0.1, "eps(G5) = {}", eps[4]);
    assert!(eps.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn orthonormality_error_shrinks_with_window() {
    let base = table_geometry();
    for order in [1, 3, 5] {
        let e20 = orthonormality_error(sample_basis(order, &base, BasisKind::Mobf).unwrap().rows());
        let e40 = orthonormality_error(
            sample_basis(order, &base.clone().with_grid(2001, 40.0).unwrap(), BasisKind::Mobf).unwrap().rows(),
        );
        assert!(e40 < e20, "N={order}: {e40} vs {e20}");
    }
}

#[test]
fn orthonormalized_kinds_are_orthonormal() {
    let g = table_geometry();
    for order in 1..=5 {
        for kind in [BasisKind::RawOrthonormalized, BasisKind::MobfReorthonormalized] {
            let e = orthonormality_error(sample_basis(order, &g, kind).unwrap().rows());
            assert!(e < 1e-12, "{kind:?} N={order}: {e}");
        }
    }
}

#[test]
fn gram_schmidt_of_raw_equals_sampled_mobf_up_to_sign() {
    let g = table_geometry();
    for order in 1..=5 {
        let mobf = sample_basis(order, &g, BasisKind::Mobf).unwrap();
        let fgs = sample_basis(order, &g, BasisKind::RawOrthonormalized).unwrap();
        let aligned = align_row_signs(fgs.rows(), mobf.rows());
        let eps = orthonormality_error(mobf.rows());
        let diff = (&aligned - mobf.rows()).norm() / ((2 * order + 1) as f64).sqrt();
        assert!(diff < 10.0 * eps, "N={order}: {diff} vs eps {eps}");
    }
}

#[test]
fn raw_and_mobf_span_the_same_space() {
    let g = table_geometry();
    for order in 1..=5 {
        let pf = row_space_projector(sample_basis(order, &g, BasisKind::Raw).unwrap().rows()).unwrap();
        let pg = row_space_projector(sample_basis(order, &g, BasisKind::Mobf).unwrap().rows()).unwrap();
        assert!((pf - pg).abs().max() < 1e-6);
    }
}

#[test]
fn rows_carry_the_sampling_scale() {
    let g = table_geometry();
    let b = sample_basis(2, &g, BasisKind::Raw).unwrap();
    assert!((b.row_scale() - (20.0f64 / 1000.0).sqrt()).abs() < 1e-15);
    let u = g.grid_point(0);
    let want = b.row_scale() * madkit::field::f_basis(2, 3, u).unwrap();
    assert!((b.rows()[(3, 0)] - want).abs() < 1e-18);
    assert_eq!(b.rows().shape(), (5, 1001));
}

#[test]
fn gram_schmidt_is_idempotent_and_detects_rank_loss() {
    let g = table_geometry();
    let q = sample_basis(3, &g, BasisKind::RawOrthonormalized).unwrap().into_rows();
    let qq = gram_schmidt(&q).unwrap();
    assert!((&qq - &q).abs().max() < 1e-14);

    let mut dep = q.clone();
    let r0 = dep.row(0).clone_owned();
    let r1 = dep.row(1).clone_owned();
    dep.set_row(2, &(r0 * 2.0 - r1));
    assert!(matches!(gram_schmidt(&dep), Err(Error::Rank(_))));
    assert!(matches!(gram_schmidt(&DMatrix::<f64>::zeros(4, 3)), Err(Error::Rank(_))));
}

#[test]
fn index_and_grid_validation() {
    assert!(matches!(mobf_polynomial(0, 0), Err(Error::Domain(_))));
    assert!(matches!(mobf_polynomial(2, 5), Err(Error::Domain(_))));
    assert!(matches!(mobf_polynomial(MAX_ORDER + 1, 0), Err(Error::Domain(_))));
    assert!(matches!(d_coefficient(2, 3, 2), Err(Error::Domain(_))));
    let tiny = table_geometry().with_grid(5, 20.0).unwrap();
    assert!(matches!(sample_basis(2, &tiny, BasisKind::Mobf), Err(Error::Rank(_))));
}

#[test]
fn basis_kind_labels_round_trip() {
    for kind in [BasisKind::Mobf, BasisKind::Raw, BasisKind::RawOrthonormalized, BasisKind::MobfReorthonormalized] {
        assert_eq!(BasisKind::parse(kind.label()).unwrap(), kind);
    }
    assert!(!BasisKind::Raw.is_orthonormal());
    assert!(BasisKind::parse("legendre").is_err());
}

proptest! {
    #[test]
    fn parity_of_basis_functions(order in 1usize..=MAX_ORDER, n_frac in 0.0f64..1.0, u in -50.0f64..50.0) {
        let n = ((2 * order + 1) as f64 * n_frac) as usize;
        let a = mobf_eval(order, n, u).unwrap();
        let b = mobf_eval(order, n, -u).unwrap();
        let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
        prop_assert!((a - sign * b).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    #[test]
    fn gegenbauer_and_expansion_agree(order in 1usize..=5, n_frac in 0.0f64..1.0, u in -20.0f64..20.0) {
        let n = ((2 * order + 1) as f64 * n_frac) as usize;
        let a = mobf_eval(order, n, u).unwrap();
        let b = mobf_eval_gegenbauer(order, n, u).unwrap();
        // Absolute floor sized to the function's peak for points near a zero.
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-3 * peak(order, n)));
    }
}
