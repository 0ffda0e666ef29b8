use std::f64::consts::PI;

use jsdm::geometry::*;
use jsdm::linalg::{self, CMat, C64};
use proptest::prelude::*;

fn deg(x: f64) -> f64 {
    x * PI / 180.0
}

#[test]
fn diagonal_equals_gain() {
    let prof = GroupProfile::with_gain(0.3, 0.2, 2.5, "g").unwrap();
    for geom in [ArrayGeometry::ula(12, 0.5).unwrap(), ArrayGeometry::uca(10).unwrap()] {
        let r = one_ring_matrix(&geom, &prof, 1e-10, 1 << 16).unwrap();
        for i in 0..r.nrows() {
            assert!((r[(i, i)] - C64::new(2.5, 0.0)).norm() < 1e-10);
        }
    }
}

#[test]
fn zero_spacing_gives_all_ones() {
    let geom = ArrayGeometry::ula(6, 0.0).unwrap();
    let spec = one_ring_covariance(&geom, &GroupProfile::new(0.2, 0.3).unwrap()).unwrap();
    assert!((spec.r.clone() - CMat::from_element(6, 6, C64::new(1.0, 0.0))).norm() < 1e-12);
    assert_eq!(spec.rank, 1);
    assert!((spec.lambda[0] - 6.0).abs() < 1e-10);
}

#[test]
fn narrow_spread_matches_steering_outer_product() {
    let (m, d, theta) = (16, 0.5, PI / 6.0);
    let geom = ArrayGeometry::ula(m, d).unwrap();
    let r = one_ring_matrix(&geom, &GroupProfile::new(theta, 1e-6).unwrap(), 1e-10, 1 << 16).unwrap();
    let a = linalg::CVec::from_fn(m, |i, _| C64::from_polar(1.0, -2.0 * PI * d * i as f64 * theta.sin()));
    let aa = &a * a.adjoint();
    assert!(linalg::max_abs(&(r - aa)) < 1e-4);
}

#[test]
fn ula_is_toeplitz_hermitian_psd() {
    let geom = ArrayGeometry::ula(40, 1.0).unwrap();
    let spec = one_ring_covariance(&geom, &GroupProfile::new(PI / 6.0, PI / 10.0).unwrap()).unwrap();
    let r = &spec.r;
    for i in 1..40 {
        for j in 1..40 {
            assert!((r[(i, j)] - r[(i - 1, j - 1)]).norm() < 1e-12);
        }
    }
    assert!(linalg::hermitian_defect(r) < 1e-15);
    let ev = linalg::herm_eigvals(r);
    assert!(*ev.last().unwrap() >= -1e-10 * ev[0]);
    assert!((linalg::re_trace(r) - 40.0).abs() < 1e-8 * 40.0);
}

#[test]
fn uca_ring_groups_rank_and_effective_rank() {
    let geom = ArrayGeometry::uca(100).unwrap();
    let delta = deg(15.0);
    for theta in ring_centers(6, delta) {
        let spec = one_ring_covariance(&geom, &GroupProfile::new(theta, delta).unwrap()).unwrap();
        assert_eq!(spec.rank, 21, "theta {theta}");
        assert_eq!(spec.r_star, 11, "theta {theta}");
        let rec = linalg::reconstruct(&spec.u, &spec.lambda);
        assert!((rec - &spec.r).norm() / spec.r.norm() < 1e-10);
        assert!(linalg::orthonormality_defect(&spec.u) < 1e-10);
    }
}

#[test]
fn identity_eigendecomposition() {
    let spec = eigendecompose(&CMat::identity(7, 7), Some(1e-12), EffectiveRank::default()).unwrap();
    assert_eq!(spec.rank, 7);
    assert!(spec.lambda.iter().all(|&l| (l - 1.0).abs() < 1e-12));
}

#[test]
fn rank_one_steering() {
    let m = 9;
    let a = linalg::CVec::from_fn(m, |i, _| C64::from_polar(1.0, 0.7 * i as f64));
    let r = (&a * a.adjoint()) * C64::new(3.0, 0.0);
    let spec = eigendecompose(&r, None, EffectiveRank::default()).unwrap();
    assert_eq!(spec.rank, 1);
    assert!((spec.lambda[0] - 3.0 * m as f64).abs() < 1e-10);
}

#[test]
fn non_hermitian_rejected() {
    let mut r = CMat::identity(3, 3);
    r[(0, 1)] = C64::new(1.0, 0.0);
    assert!(matches!(eigendecompose(&r, None, EffectiveRank::default()), Err(jsdm::JsdmError::NotHermitian(_))));
}

#[test]
fn explicit_effective_rank_override() {
    let geom = ArrayGeometry::ula(20, 0.5).unwrap();
    let opts = CovarianceOptions { eff_rule: EffectiveRank::Fixed(3), ..Default::default() };
    let spec = one_ring_covariance_with(&geom, &GroupProfile::new(0.0, 0.4).unwrap(), &opts).unwrap();
    assert_eq!(spec.r_star, 3);
    assert_eq!(spec.u_star().ncols(), 3);
}

#[test]
fn empty_and_rank_one_batches() {
    let geom = ArrayGeometry::ula(8, 0.0).unwrap();
    let spec = one_ring_covariance(&geom, &GroupProfile::new(0.0, 0.1).unwrap()).unwrap();
    assert_eq!(sample_channels(&spec, 0, 1).h.ncols(), 0);
    let b = sample_channels(&spec, 5, 7);
    let u = spec.u.column(0);
    for col in b.h.column_iter() {
        let proj = u * (u.adjoint() * col);
        assert!((col - proj).norm() <= 1e-10 * col.norm());
    }
}

#[test]
fn sampled_covariance_converges() {
    let geom = ArrayGeometry::ula(8, 0.5).unwrap();
    let spec = one_ring_covariance(&geom, &GroupProfile::new(0.4, 0.3).unwrap()).unwrap();
    let k = 20000;
    let b = sample_channels(&spec, k, 11);
    let emp = (&b.h * b.h.adjoint()) / C64::new(k as f64, 0.0);
    assert!((emp - &spec.r).norm() / spec.r.norm() < 0.05);
}

#[test]
fn channels_are_deterministic_and_in_span() {
    let geom = ArrayGeometry::uca(16).unwrap();
    let spec = one_ring_covariance(&geom, &GroupProfile::new(0.5, 0.2).unwrap()).unwrap();
    let a = sample_channels(&spec, 4, 99);
    let b = sample_channels(&spec, 4, 99);
    assert_eq!(a.h, b.h);
    let p = &spec.u * spec.u.adjoint();
    assert!((&a.h - &p * &a.h).norm() <= 1e-10 * a.h.norm());
}

#[test]
fn kronecker_identity_and_rank() {
    let geom = ArrayGeometry::ula(6, 0.5).unwrap();
    let rh = one_ring_covariance(&geom, &GroupProfile::new(0.2, 0.3).unwrap()).unwrap();
    let one = eigendecompose(&CMat::identity(1, 1), None, EffectiveRank::default()).unwrap();
    let k = kronecker_covariance(&rh, &one).unwrap();
    assert!((k.r.clone() - &rh.r).norm() < 1e-14);

    let a = linalg::CVec::from_fn(4, |i, _| C64::new(1.0, i as f64));
    let b = linalg::CVec::from_fn(4, |i, _| C64::new((i * i) as f64, 1.0));
    let r2 = &a * a.adjoint() + &b * b.adjoint();
    let s2 = eigendecompose(&r2, None, EffectiveRank::default()).unwrap();
    let c = CMat::from_fn(3, 3, |i, j| C64::new(((i + 1) * (j + 1)) as f64, 0.0)) + CMat::identity(3, 3);
    let s3 = eigendecompose(&c, None, EffectiveRank::default()).unwrap();
    assert_eq!(s2.rank, 2);
    assert_eq!(s3.rank, 3);
    assert_eq!(kronecker_covariance(&s2, &s3).unwrap().rank, 6);
}

#[test]
fn kronecker_cap_guard() {
    let s = eigendecompose(&CMat::identity(10, 10), None, EffectiveRank::default()).unwrap();
    assert!(matches!(
        kronecker_covariance_capped(&s, &s, 50),
        Err(jsdm::JsdmError::DimensionOverflow { requested: 100, cap: 50 })
    ));
}

fn random_psd(seed: u64, n: usize) -> CMat {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let x = linalg::complex_gaussian(&mut rng, n, n);
    &x * x.adjoint()
}

#[test]
fn kronecker_eigenvalues_are_pairwise_products() {
    let a = eigendecompose(&random_psd(1, 4), None, EffectiveRank::default()).unwrap();
    let b = eigendecompose(&random_psd(2, 3), None, EffectiveRank::default()).unwrap();
    let k = kronecker_covariance(&a, &b).unwrap();
    let dense = linalg::herm_eigvals(&k.r);
    let mut prods: Vec<f64> = a.lambda.iter().flat_map(|x| b.lambda.iter().map(move |y| x * y)).collect();
    prods.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for (p, d) in prods.iter().zip(&dense) {
        assert!((p - d).abs() < 1e-9 * dense[0]);
    }
    let rec = linalg::reconstruct(&k.u, &k.lambda);
    assert!((rec - &k.r).norm() < 1e-9 * k.r.norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn covariance_invariants(theta in -1.2f64..1.2, delta in 0.01f64..0.35, d in 0.1f64..1.0, m in 2usize..24, gain in 0.1f64..3.0) {
        let geom = ArrayGeometry::ula(m, d).unwrap();
        let prof = GroupProfile::with_gain(theta, delta, gain, "p").unwrap();
        let spec = one_ring_covariance(&geom, &prof).unwrap();
        prop_assert!(linalg::hermitian_defect(&spec.r) < 1e-14);
        prop_assert!((linalg::re_trace(&spec.r) - m as f64 * gain).abs() <= 1e-8 * m as f64 * gain);
        let ev = linalg::herm_eigvals(&spec.r);
        prop_assert!(*ev.last().unwrap() >= -1e-10 * ev[0]);
        prop_assert!(spec.r_star >= 1 && spec.r_star <= spec.rank && spec.rank <= m);
        prop_assert!(spec.lambda.windows(2).all(|w| w[0] >= w[1]));
        let rec = linalg::reconstruct(&spec.u, &spec.lambda);
        prop_assert!((rec - &spec.r).norm() <= 1e-10 * spec.r.norm());
    }

    #[test]
    fn uca_invariants(theta in -2.5f64..2.5, delta in 0.05f64..0.6, m in 3usize..20) {
        let geom = ArrayGeometry::uca(m).unwrap();
        let prof = GroupProfile::new(theta, delta).unwrap();
        let spec = one_ring_covariance(&geom, &prof).unwrap();
        for i in 0..m {
            prop_assert!((spec.r[(i, i)] - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
        let ev = linalg::herm_eigvals(&spec.r);
        prop_assert!(*ev.last().unwrap() >= -1e-10 * ev[0]);
    }
}
