//! Invariant suites run by the `validate` command.

use std::f64::consts::PI;

use jsdm::deteq::{self, PgpInputs, SolverConfig};
use jsdm::geometry::{self, ArrayGeometry, CovarianceSpec, GroupProfile};
use jsdm::linalg::{self, CMat};
use jsdm::prebeam::{self, PreBeamformer};
use jsdm::precoding::{self, PrecodingConfig, Processing, Scheme};
use jsdm::training::{self, TrainingConfig};

use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against the bound.
    pub value: f64,
    pub bound: f64,
}

impl CheckResult {
    fn at_most(suite: &'static str, name: impl Into<String>, value: f64, bound: f64) -> Self {
        CheckResult { suite, name: name.into(), passed: value <= bound && value.is_finite(), value, bound }
    }
}

fn fixtures() -> (Vec<CovarianceSpec>, Vec<CovarianceSpec>) {
    let d = 15f64.to_radians();
    let uca = ArrayGeometry::uca(32).expect("uca");
    let ula = ArrayGeometry::ula(32, 0.5).expect("ula");
    let u: Vec<_> = geometry::ring_centers(4, d)
        .into_iter()
        .map(|t| geometry::one_ring_covariance(&uca, &GroupProfile::new(t, d).unwrap()).unwrap())
        .collect();
    let l: Vec<_> = [-PI / 4.0, 0.0, PI / 4.0]
        .iter()
        .map(|&t| geometry::one_ring_covariance(&ula, &GroupProfile::new(t, d).unwrap()).unwrap())
        .collect();
    (u, l)
}

pub fn covariance_suite() -> Vec<CheckResult> {
    let (uca, ula) = fixtures();
    let mut out = Vec::new();
    for (tag, set) in [("uca", &uca), ("ula", &ula)] {
        for (g, s) in set.iter().enumerate() {
            let top = s.lambda[0];
            out.push(CheckResult::at_most("covariance", format!("{tag}{g} hermitian"), linalg::hermitian_defect(&s.r), 1e-12));
            let ev = linalg::herm_eigvals(&s.r);
            let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
            out.push(CheckResult::at_most("covariance", format!("{tag}{g} psd"), (-min / top).max(0.0), 1e-10));
            let tr = linalg::re_trace(&s.r);
            out.push(CheckResult::at_most(
                "covariance",
                format!("{tag}{g} trace"),
                (tr - s.dim() as f64 * s.gain).abs() / tr,
                1e-9,
            ));
            if tag == "ula" {
                let m = s.dim();
                let mut worst: f64 = 0.0;
                for i in 0..m - 1 {
                    for j in 0..m - 1 {
                        worst = worst.max((s.r[(i, j)] - s.r[(i + 1, j + 1)]).norm());
                    }
                }
                out.push(CheckResult::at_most("covariance", format!("{tag}{g} toeplitz"), worst, 1e-12));
            }
        }
    }
    out
}

fn psd_defect(x: &CMat) -> f64 {
    let ev = linalg::herm_eigvals(&linalg::hermitize(x));
    let top = ev.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    (-ev.iter().copied().fold(f64::INFINITY, f64::min) / top).max(0.0)
}

pub fn mmse_suite() -> Vec<CheckResult> {
    let (uca, _) = fixtures();
    let pb = prebeam::approximate_bd(&uca, &[4; 4], &[6; 4]).expect("bd");
    let mut out = Vec::new();
    for rho in [0.1, 10.0, 1000.0] {
        let tc = TrainingConfig { b_prime: 6, t_coherence: 40, rho_tr: rho, seed: 0 };
        let est = training::estimators(&uca, &pb, &tc).expect("estimators");
        for (g, e) in est.iter().enumerate() {
            let d = (&e.rbar - &e.rhat - &e.rerr).norm() / e.rbar.norm();
            out.push(CheckResult::at_most("mmse", format!("rho {rho} group {g} decomposition"), d, 1e-12));
            out.push(CheckResult::at_most("mmse", format!("rho {rho} group {g} estimate psd"), psd_defect(&e.rhat), 1e-9));
            out.push(CheckResult::at_most("mmse", format!("rho {rho} group {g} error psd"), psd_defect(&e.rerr), 1e-9));
        }
    }
    // empirical covariance of the estimates against R̂
    let tc = TrainingConfig { b_prime: 6, t_coherence: 40, rho_tr: 10.0, seed: 0 };
    let est = training::estimators(&uca, &pb, &tc).expect("estimators");
    let draws = 4000;
    let mut acc = vec![CMat::zeros(6, 6); uca.len()];
    for d in 0..draws {
        let h: Vec<CMat> = uca
            .iter()
            .enumerate()
            .map(|(g, s)| geometry::sample_channels_rng(s, 1, &mut stream_rng(11, d, g as u64)))
            .collect();
        let obs = training::simulate_training_rng(&h, &pb, &tc, &mut stream_rng(11, d, 99)).expect("training");
        let hat = training::apply_estimators(&obs, &est).expect("apply").hhat;
        for g in 0..uca.len() {
            acc[g] += &hat[g] * hat[g].adjoint();
        }
    }
    for g in 0..uca.len() {
        let emp = &acc[g] / jsdm::linalg::C64::new(draws as f64, 0.0);
        let rel = (&emp - &est[g].rhat).norm() / est[g].rhat.norm();
        out.push(CheckResult::at_most("mmse", format!("group {g} empirical estimate covariance"), rel, 0.1));
    }
    out
}

fn draw_channels(specs: &[CovarianceSpec], streams: &[usize], seed: u64, d: u64) -> Vec<CMat> {
    let mut user = 0;
    specs
        .iter()
        .zip(streams)
        .map(|(s, &k)| {
            let cols: Vec<CMat> = (0..k)
                .map(|_| {
                    user += 1;
                    geometry::sample_channels_rng(s, 1, &mut stream_rng(seed, d, user))
                })
                .collect();
            linalg::hstack(&cols)
        })
        .collect()
}

fn setups() -> (Vec<CovarianceSpec>, PreBeamformer) {
    let (uca, _) = fixtures();
    let pb = prebeam::approximate_bd(&uca, &[4; 4], &[6; 4]).expect("bd");
    (uca, pb)
}

pub fn power_suite() -> Vec<CheckResult> {
    let (specs, pb) = setups();
    let streams = vec![3; 4];
    let p = 20.0;
    let mut out = Vec::new();
    for scheme in [Scheme::Rzf, Scheme::Zf] {
        for processing in [Processing::Jgp, Processing::Pgp] {
            let cfg = PrecodingConfig::new(scheme, processing, p, streams.clone());
            let mut worst: f64 = 0.0;
            for d in 0..20 {
                let h = draw_channels(&specs, &streams, 5, d);
                let heff = precoding::effective_channels(processing, Some(&pb), &h).expect("heff");
                let pre = precoding::design_precoders(&cfg, Some(&pb), &heff).expect("precoders");
                let v = precoding::transmit_matrix(processing, Some(&pb), &pre).expect("v");
                worst = worst.max((precoding::transmit_power(&v, p) - p).abs() / p);
            }
            out.push(CheckResult::at_most("power", format!("{processing:?}-{scheme:?} trace = P"), worst, 1e-9));
        }
    }
    out
}

pub fn continuity_suite() -> Vec<CheckResult> {
    let (specs, pb) = setups();
    let streams = vec![3; 4];
    let p = 100.0;
    let mut out = Vec::new();
    for processing in [Processing::Jgp, Processing::Pgp] {
        let mut worst: f64 = 0.0;
        for d in 0..10 {
            let h = draw_channels(&specs, &streams, 6, d);
            let zf = precoding::evaluate(&PrecodingConfig::new(Scheme::Zf, processing, p, streams.clone()), Some(&pb), &h).expect("zf");
            let mut cfg = PrecodingConfig::new(Scheme::Rzf, processing, p, streams.clone());
            cfg.alpha = Some(1e-10);
            let rzf = precoding::evaluate(&cfg, Some(&pb), &h).expect("rzf");
            for (a, b) in rzf.sinr.iter().zip(&zf.sinr) {
                worst = worst.max((a - b).abs() / b);
            }
        }
        out.push(CheckResult::at_most("continuity", format!("{processing:?} RZF(α→0) → ZF"), worst, 1e-4));
    }
    out
}

pub fn single_group_suite() -> Vec<CheckResult> {
    let geom = ArrayGeometry::uca(32).expect("uca");
    let spec = geometry::one_ring_covariance(&geom, &GroupProfile::new(0.3, 0.4).unwrap()).unwrap();
    let specs = vec![spec];
    let pb = prebeam::dominant_eigen_beamforming(&specs, &[8]).expect("pb");
    let mut out = Vec::new();
    let cfg = SolverConfig { tol: 1e-12, ..Default::default() };
    for p in [1.0, 100.0] {
        let alpha = precoding::default_alpha(4, 8, p);
        let (rt, bb) = deteq::jgp_inputs(&specs, &pb);
        let j = deteq::deteq_jgp_rzf(&rt, &bb, &[4], p, alpha, &cfg).expect("jgp");
        let inp = PgpInputs::from_prebeam(&specs, &pb).expect("inputs");
        let q = deteq::deteq_pgp_rzf(&inp, &[4], p, alpha, &cfg).expect("pgp");
        out.push(CheckResult::at_most("single-group", format!("det-eq P = {p}"), (j.gamma[0] - q.gamma[0]).abs() / q.gamma[0], 1e-9));
    }
    for scheme in [Scheme::Rzf, Scheme::Zf] {
        let mut worst: f64 = 0.0;
        for d in 0..5 {
            let h = draw_channels(&specs, &[4], 8, d);
            let a = precoding::evaluate(&PrecodingConfig::new(scheme, Processing::Jgp, 10.0, vec![4]), Some(&pb), &h).expect("jgp");
            let b = precoding::evaluate(&PrecodingConfig::new(scheme, Processing::Pgp, 10.0, vec![4]), Some(&pb), &h).expect("pgp");
            worst = worst.max((a.sum_se - b.sum_se).abs() / b.sum_se);
        }
        out.push(CheckResult::at_most("single-group", format!("{scheme:?} precoders"), worst, 1e-10));
    }
    out
}

pub fn all_suites() -> Vec<CheckResult> {
    let mut v = covariance_suite();
    v.extend(mmse_suite());
    v.extend(power_suite());
    v.extend(continuity_suite());
    v.extend(single_group_suite());
    v
}
