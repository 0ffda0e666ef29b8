use std::f64::consts::PI;

use jsdm::geometry::{self, ArrayGeometry, GroupProfile};
use jsdm::linalg::{self, C64};
use jsdm::spectrum::*;
use proptest::prelude::*;

fn deg(x: f64) -> f64 {
    x * PI / 180.0
}

#[test]
fn density_zero_outside_support() {
    let sd = SpectralDensity::new(0.5, 0.0, deg(15.0)).unwrap();
    assert_eq!(sd.eval(0.4).value, 0.0);
    assert_eq!(sd.support.len(), 1);
    let (a, b) = sd.support[0];
    assert!((a + 0.5 * deg(15.0).sin()).abs() < 1e-12);
    assert!((b - 0.5 * deg(15.0).sin()).abs() < 1e-12);
}

#[test]
fn density_at_origin() {
    for delta in [0.1, 0.3, 1.0] {
        let sd = SpectralDensity::new(0.5, 0.0, delta).unwrap();
        assert!((sd.eval(0.0).value - 1.0 / delta).abs() < 1e-12);
    }
}

#[test]
fn isotropic_ring() {
    for d in [0.25, 0.5] {
        let sd = SpectralDensity::new(d, 0.0, PI).unwrap();
        assert_eq!(sd.case_id, AoaCase::BothTurns);
        for xi in [-0.2f64, -0.05, 0.0, 0.1, 0.2] {
            if xi.abs() < d {
                let want = 1.0 / PI / (d * d - xi * xi).sqrt();
                assert!((sd.eval(xi).value - want).abs() < 1e-12 * want, "d={d} xi={xi}");
            }
        }
    }
}

#[test]
fn singular_points_are_flagged() {
    let sd = SpectralDensity::new(0.5, 0.0, PI).unwrap();
    let v = sd.eval(0.5);
    assert!(v.singular && v.value.is_infinite());
}

#[test]
fn asymptotic_rank_examples() {
    assert_eq!(asymptotic_rank(0.5, 0.3, 0.0).unwrap().rho, 0.0);
    let r = asymptotic_rank(1.0, PI / 6.0, PI / 10.0).unwrap();
    assert!(r.closed_form);
    assert!((r.rho - (deg(12.0).sin() - deg(48.0).sin()).abs()).abs() < 1e-12);
    assert!((r.rho - 0.5352).abs() < 1e-4);
    let r = asymptotic_rank(0.5, 0.0, deg(15.0)).unwrap();
    assert!((r.rho - deg(15.0).sin()).abs() < 1e-12);
    assert!((r.rho - 0.2588).abs() < 1e-4);
    let g = asymptotic_rank(0.5, 0.0, 2.0).unwrap();
    assert!(!g.closed_form);
    assert!((g.rho - 1.0).abs() < 1e-12);
}

#[test]
fn circulant_trivial_spectra() {
    let mut r = vec![C64::new(0.0, 0.0); 8];
    r[0] = C64::new(1.0, 0.0);
    assert!(circulant_eigenvalues(&r).unwrap().iter().all(|&l| (l - 1.0).abs() < 1e-12));
    let ones = vec![C64::new(1.0, 0.0); 8];
    // The wrapped column is (1, 2, ..., 2), so λ_0 = 2M − 1 and λ_k = −1.
    let l = circulant_eigenvalues(&ones).unwrap();
    assert!((l[0] - 15.0).abs() < 1e-12);
    assert!(l[1..].iter().all(|x| (x + 1.0).abs() < 1e-12));
}

#[test]
fn circulant_rejects_complex_r0() {
    assert!(circulant_eigenvalues(&[C64::new(1.0, 0.5), C64::new(0.0, 0.0)]).is_err());
}

#[test]
fn circulant_eigenvalues_sample_the_symbol() {
    // For large M, λ_k(C) is close to S(k/M) away from the support edges.
    let cfg = UlaConfig::new(400, 0.5, 0.2, 0.2);
    let lam = circulant_eigenvalues(&cfg.correlations().unwrap()).unwrap();
    let sd = SpectralDensity::new(0.5, 0.2, 0.2).unwrap();
    let (a, b) = sd.support[0];
    let mut checked = 0;
    for (k, &l) in lam.iter().enumerate() {
        let xi = wrap_frequency(k as f64 / 400.0);
        if xi > a + 0.02 && xi < b - 0.02 {
            let s = sd.eval(xi).value;
            assert!((l - s).abs() < 0.1 * s, "k={k}");
            checked += 1;
        }
    }
    assert!(checked > 20);
}

#[test]
fn fig4_cdfs_agree_on_continuity_interval() {
    let cfg = UlaConfig::new(400, 1.0, PI / 6.0, PI / 10.0);
    let ex = eigenvalue_cdf(CdfSource::Exact, &cfg).unwrap();
    let ci = eigenvalue_cdf(CdfSource::Circulant, &cfg).unwrap();
    let ss = eigenvalue_cdf(CdfSource::SampledS, &cfg).unwrap();
    let floor = 0.01 * ex.last().unwrap();
    assert!(ks_distance_from(&ex, &ci, floor) <= 0.03);
    assert!(ks_distance_from(&ex, &ss, floor) <= 0.03);
    assert!(ks_distance_from(&ci, &ss, floor) <= 0.03);
}

#[test]
fn sampled_symbol_mass_at_zero() {
    let cfg = UlaConfig::new(400, 1.0, PI / 6.0, PI / 10.0);
    let ss = eigenvalue_cdf(CdfSource::SampledS, &cfg).unwrap();
    let rho = asymptotic_rank(1.0, PI / 6.0, PI / 10.0).unwrap().rho;
    let zeros = ss.iter().filter(|&&x| x == 0.0).count() as f64 / 400.0;
    assert!((zeros - (1.0 - rho)).abs() <= 2.0 / 400.0);
}

#[test]
fn all_ones_exact_cdf() {
    let cfg = UlaConfig { m: 4, d: 0.0, theta: 0.1, delta: 0.2, quad_tol: 1e-10 };
    let ex = eigenvalue_cdf(CdfSource::Exact, &cfg).unwrap();
    assert!(ex[..3].iter().all(|x| x.abs() < 1e-12));
    assert!((ex[3] - 4.0).abs() < 1e-12);
}

#[test]
fn disjointness_examples() {
    let p = |t: f64| GroupProfile::new(t, deg(15.0)).unwrap();
    let m = aoa_disjoint(&[p(-PI / 4.0), p(0.0), p(PI / 4.0)]);
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(m[i][j], i != j);
        }
    }
    assert!(!aoa_disjoint(&[p(0.1), p(0.1)])[0][1]);
    assert!(!aoa_disjoint(&[p(0.0), p(deg(30.0))])[0][1]);
}

#[test]
fn dft_index_examples() {
    let full = SpectralDensity::new(1.0, 0.0, PI / 2.0 - 1e-9).unwrap();
    assert!((full.support_measure() - 1.0).abs() < 1e-6);
    let iso = SpectralDensity::new(1.0, 0.0, PI).unwrap();
    assert_eq!(dft_index_set(&iso, 64).unwrap().indices.len(), 64);

    let sd = SpectralDensity::new(0.5, 0.0, deg(15.0)).unwrap();
    let n = dft_index_set(&sd, 400).unwrap().indices.len();
    assert!(n == 103 || n == 104, "{n}");

    let sets: Vec<_> = [-PI / 4.0, 0.0, PI / 4.0]
        .iter()
        .map(|&t| dft_index_set(&SpectralDensity::new(0.5, t, deg(15.0)).unwrap(), 400).unwrap().indices)
        .collect();
    for i in 0..3 {
        for j in (i + 1)..3 {
            assert!(sets[i].iter().all(|k| !sets[j].contains(k)));
        }
    }
}

#[test]
fn dft_index_set_empty_is_error() {
    let sd = SpectralDensity::new(0.5, 0.3, 1e-5).unwrap();
    assert!(dft_index_set(&sd, 8).is_err());
}

#[test]
fn fig5_eigenspace_close_to_dft_subspace() {
    let m = |mm: usize| -> Vec<f64> {
        let geom = ArrayGeometry::ula(mm, 0.5).unwrap();
        [-PI / 4.0, 0.0, PI / 4.0]
            .iter()
            .map(|&t| {
                let prof = GroupProfile::new(t, deg(15.0)).unwrap();
                let spec = geometry::eigendecompose(
                    &geometry::one_ring_matrix(&geom, &prof, 1e-10, 1 << 16).unwrap(),
                    Some(1e-6),
                    geometry::EffectiveRank::TraceFraction(1.0),
                )
                .unwrap();
                let idx = dft_index_set(&SpectralDensity::from_profile(0.5, &prof).unwrap(), mm).unwrap();
                subspace_distance(&spec.u, &linalg::fourier_columns(mm, &idx.indices))
            })
            .collect()
    };
    let d100 = m(100);
    let d200 = m(200);
    let d400 = m(400);
    for g in 0..3 {
        assert!(d400[g] <= 0.05, "group {g}: {}", d400[g]);
        assert!(d200[g] <= 1.1 * d100[g] && d400[g] <= 1.1 * d200[g], "group {g}: {d100:?} {d200:?} {d400:?}");
    }
}

fn grid_measure(sd: &SpectralDensity) -> f64 {
    let n = 100_000;
    let pos = (0..n)
        .filter(|&k| {
            let xi = -0.5 + (k as f64 + 0.5) / n as f64;
            let v = sd.eval(xi);
            v.singular || v.value > 0.0
        })
        .count();
    pos as f64 / n as f64
}

#[test]
fn support_measure_matches_scan_in_all_cases() {
    for (d, t, dl) in [(0.5, 0.2, 0.3), (1.0, 2.4, 0.5), (0.5, 0.0, 2.0), (0.8, -1.4, 0.4), (0.3, 1.3, 0.5)] {
        let sd = SpectralDensity::new(d, t, dl).unwrap();
        assert!((sd.support_measure() - grid_measure(&sd)).abs() < 1e-4, "{:?}", sd.case_id);
    }
}

#[test]
fn symbol_integrates_to_one() {
    for (d, t, dl) in [(0.5, 0.2, 0.3), (1.0, PI / 6.0, PI / 10.0), (0.5, 0.0, PI)] {
        let sd = SpectralDensity::new(d, t, dl).unwrap();
        let m = 4000;
        let mean: f64 = (0..m).map(|k| sd.eval(wrap_frequency((k as f64 + 0.5) / m as f64)).value).sum::<f64>() / m as f64;
        assert!((mean - 1.0).abs() <= 5.0 / 400.0, "{mean}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_measure_in_lemma_regime(d in 0.05f64..1.0, theta in -1.2f64..1.2, delta in 0.01f64..0.35) {
        prop_assume!((theta - delta).abs() < PI / 2.0 && (theta + delta).abs() < PI / 2.0);
        let sd = SpectralDensity::new(d, theta, delta).unwrap();
        let b = rank_bandwidth(d, theta, delta).min(1.0);
        prop_assert!((sd.support_measure() - b).abs() < 1e-9);
        prop_assert!((asymptotic_rank(d, theta, delta).unwrap().rho - b).abs() < 1e-12);
    }

    #[test]
    fn symbol_bounds_on_support(d in 0.1f64..0.5, theta in -1.0f64..1.0, delta in 0.02f64..0.3, u in 0.0f64..1.0) {
        prop_assume!((theta - delta).abs() < 1.45 && (theta + delta).abs() < 1.45);
        let sd = SpectralDensity::new(d, theta, delta).unwrap();
        let (a, b) = sd.support[0];
        let xi = a + (b - a) * (0.001 + 0.998 * u);
        let phi = (theta - delta).abs().max((theta + delta).abs());
        let s = sd.eval(xi).value;
        let lo = 1.0 / (2.0 * delta * d);
        let hi = 1.0 / (2.0 * delta * d * phi.cos());
        prop_assert!(s >= lo * (1.0 - 1e-12) && s <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn sampled_mean_preserved(theta in -0.8f64..0.8, delta in 0.25f64..0.6, d in 0.5f64..1.0) {
        prop_assume!((theta - delta).abs() < 1.4 && (theta + delta).abs() < 1.4);
        // A Riemann sum misses at most one cell per support edge, so the 5/M
        // budget applies when the peak density stays moderate.
        let phi = (theta - delta).abs().max((theta + delta).abs());
        prop_assume!(1.0 / (2.0 * delta * d * phi.cos()) <= 2.5);
        let m = 400;
        let sd = SpectralDensity::new(d, theta, delta).unwrap();
        let mean: f64 = (0..m).map(|k| {
            let v = sd.eval(wrap_frequency(k as f64 / m as f64));
            if v.singular { 0.0 } else { v.value }
        }).sum::<f64>() / m as f64;
        prop_assert!((mean - 1.0).abs() <= 5.0 / m as f64, "mean {}", mean);
    }

    #[test]
    fn index_set_size_tracks_measure(theta in -1.0f64..1.0, delta in 0.05f64..0.3, m in 64usize..600) {
        prop_assume!((theta - delta).abs() < 1.5 && (theta + delta).abs() < 1.5);
        let sd = SpectralDensity::new(0.5, theta, delta).unwrap();
        let set = dft_index_set(&sd, m).unwrap();
        let mut sorted = set.indices.clone();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), set.indices.len());
        prop_assert!((set.indices.len() as f64 / m as f64 - sd.support_measure()).abs() <= 2.0 / m as f64);
    }
}
