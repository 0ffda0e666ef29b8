//! Downlink training, MMSE estimation of effective channels, and net rates.
//!
//! All groups share one b'-symbol training phase. Group g observes
//! h̃ = √ρ (Σ_g' B_g')^H h + z, which contains its own effective channel
//! B_g^H h plus leakage of the other groups' training through the same channel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{JsdmError, Result};
use crate::geometry::CovarianceSpec;
use crate::linalg::{self, CMat, C64};
use crate::prebeam::PreBeamformer;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// Training symbols per group; equals the common pre-beamformed width.
    pub b_prime: usize,
    /// Coherence block length in symbols.
    pub t_coherence: usize,
    pub rho_tr: f64,
    pub seed: u64,
}

impl TrainingConfig {
    /// Training power defaults to P/G.
    pub fn new(b_prime: usize, t_coherence: usize, p: f64, groups: usize, seed: u64) -> Result<Self> {
        let tc = TrainingConfig { b_prime, t_coherence, rho_tr: p / groups as f64, seed };
        tc.validate()?;
        Ok(tc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b_prime == 0 {
            return Err(JsdmError::invalid("b' must be at least 1"));
        }
        if !(self.rho_tr >= 0.0 && self.rho_tr.is_finite()) {
            return Err(JsdmError::invalid(format!("training power must be >= 0, got {}", self.rho_tr)));
        }
        Ok(())
    }

    pub fn penalty(&self) -> f64 {
        penalty_factor(self.b_prime, self.t_coherence)
    }

    /// Dimensionality crowding b'/T.
    pub fn crowding(&self) -> f64 {
        self.b_prime as f64 / self.t_coherence as f64
    }
}

/// max{1 − b'/T, 0}.
pub fn penalty_factor(b_prime: usize, t: usize) -> f64 {
    if t == 0 {
        return 0.0;
    }
    (1.0 - b_prime as f64 / t as f64).max(0.0)
}

pub fn net_rate(rates: &[f64], tc: &TrainingConfig) -> Vec<f64> {
    let f = tc.penalty();
    rates.iter().map(|r| r * f).collect()
}

/// Σ_g B_g; all blocks must share the width b'.
pub fn training_sum(pb: &PreBeamformer) -> Result<CMat> {
    let b = pb.b[0];
    if pb.b.iter().any(|&x| x != b) {
        return Err(JsdmError::invalid(format!(
            "shared training needs equal pre-beamformed widths, got {:?}",
            pb.b
        )));
    }
    let mut s = pb.blocks[0].clone();
    for blk in &pb.blocks[1..] {
        s += blk;
    }
    Ok(s)
}

fn check(pb: &PreBeamformer, tc: &TrainingConfig) -> Result<CMat> {
    tc.validate()?;
    let s = training_sum(pb)?;
    if s.ncols() != tc.b_prime {
        return Err(JsdmError::invalid(format!(
            "b' = {} differs from the pre-beamformer width {}",
            tc.b_prime,
            s.ncols()
        )));
    }
    Ok(s)
}

/// Observations (b' × S_g per group) for true channels `channels` (M × S_g).
pub fn simulate_training(channels: &[CMat], pb: &PreBeamformer, tc: &TrainingConfig) -> Result<Vec<CMat>> {
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    simulate_training_rng(channels, pb, tc, &mut rng)
}

pub fn simulate_training_rng<R: rand::Rng + ?Sized>(
    channels: &[CMat],
    pb: &PreBeamformer,
    tc: &TrainingConfig,
    rng: &mut R,
) -> Result<Vec<CMat>> {
    let s = check(pb, tc)?;
    let sq = C64::new(tc.rho_tr.sqrt(), 0.0);
    Ok(channels
        .iter()
        .map(|h| s.adjoint() * h * sq + linalg::complex_gaussian(rng, tc.b_prime, h.ncols()))
        .collect())
}

/// Closed-form second-order description of one group's estimator.
#[derive(Debug, Clone)]
pub struct GroupEstimator {
    /// ĥ = W h̃.
    pub w: CMat,
    /// R̄ = B_g^H R_g B_g.
    pub rbar: CMat,
    pub rhat: CMat,
    pub rerr: CMat,
    /// True when the reduced exact-BD form was used.
    pub reduced: bool,
}

/// Leakage below which the reduced estimator is used.
pub const REDUCED_LEAK_TOL: f64 = 1e-12;
pub const COND_MAX: f64 = 1e12;

fn inner_inverse(q: &CMat, rho: f64) -> Result<CMat> {
    let n = q.nrows();
    let a = linalg::hermitize(&(q * C64::new(rho, 0.0) + CMat::identity(n, n)));
    let ev = linalg::herm_eigvals(&a);
    let (hi, lo) = (ev[0], ev[n - 1]);
    if !(lo > 0.0) || hi / lo > COND_MAX {
        return Err(JsdmError::Singular(format!("training covariance condition {:.3e} exceeds {COND_MAX:e}", hi / lo)));
    }
    linalg::hpd_inverse(&a)
}

/// Estimator with C = B_g^H R_g ΣB and Q = ΣB^H R_g ΣB:
/// W = √ρ C (ρQ + I)^{-1}, R̂ = ρ C (ρQ + I)^{-1} C^H.
pub fn general_estimator(spec: &CovarianceSpec, bg: &CMat, sum_b: &CMat, rho: f64) -> Result<GroupEstimator> {
    let rbar = linalg::hermitize(&(bg.adjoint() * &spec.r * bg));
    let c = bg.adjoint() * &spec.r * sum_b;
    let q = sum_b.adjoint() * &spec.r * sum_b;
    let inv = inner_inverse(&q, rho)?;
    let ci = &c * inv;
    let rhat = linalg::hermitize(&(&ci * c.adjoint() * C64::new(rho, 0.0)));
    Ok(GroupEstimator {
        w: ci * C64::new(rho.sqrt(), 0.0),
        rerr: &rbar - &rhat,
        rbar,
        rhat,
        reduced: false,
    })
}

/// Exact-BD form: W = √ρ R̄ (ρR̄ + I)^{-1}.
pub fn reduced_estimator(spec: &CovarianceSpec, bg: &CMat, rho: f64) -> Result<GroupEstimator> {
    let rbar = linalg::hermitize(&(bg.adjoint() * &spec.r * bg));
    let inv = inner_inverse(&rbar, rho)?;
    let ri = &rbar * inv;
    let rhat = linalg::hermitize(&(&ri * &rbar * C64::new(rho, 0.0)));
    Ok(GroupEstimator {
        w: ri * C64::new(rho.sqrt(), 0.0),
        rerr: &rbar - &rhat,
        rbar,
        rhat,
        reduced: true,
    })
}

/// Relative leakage Σ_{g'≠g} ‖R_g B_g'‖²_F / ‖R_g‖²_F.
pub fn training_leakage(spec: &CovarianceSpec, pb: &PreBeamformer, g: usize) -> f64 {
    let nr = spec.r.norm_squared();
    pb.blocks
        .iter()
        .enumerate()
        .filter(|(h, _)| *h != g)
        .map(|(_, b)| (&spec.r * b).norm_squared())
        .sum::<f64>()
        / nr
}

/// Per-group estimators; the reduced form is chosen when leakage is negligible.
pub fn estimators(specs: &[CovarianceSpec], pb: &PreBeamformer, tc: &TrainingConfig) -> Result<Vec<GroupEstimator>> {
    let s = check(pb, tc)?;
    if specs.len() != pb.groups() {
        return Err(JsdmError::invalid("one covariance per group is required"));
    }
    specs
        .iter()
        .zip(&pb.blocks)
        .enumerate()
        .map(|(g, (spec, bg))| {
            if training_leakage(spec, pb, g) < REDUCED_LEAK_TOL {
                reduced_estimator(spec, bg, tc.rho_tr)
            } else {
                general_estimator(spec, bg, &s, tc.rho_tr)
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CsitEstimate {
    /// b' × S_g estimates of B_g^H H_g.
    pub hhat: Vec<CMat>,
    pub rhat: Vec<CMat>,
    pub rerr: Vec<CMat>,
}

pub fn mmse_estimate(obs: &[CMat], specs: &[CovarianceSpec], pb: &PreBeamformer, tc: &TrainingConfig) -> Result<CsitEstimate> {
    let est = estimators(specs, pb, tc)?;
    apply_estimators(obs, &est)
}

pub fn apply_estimators(obs: &[CMat], est: &[GroupEstimator]) -> Result<CsitEstimate> {
    if obs.len() != est.len() {
        return Err(JsdmError::invalid("one observation block per group is required"));
    }
    Ok(CsitEstimate {
        hhat: obs.iter().zip(est).map(|(y, e)| &e.w * y).collect(),
        rhat: est.iter().map(|e| e.rhat.clone()).collect(),
        rerr: est.iter().map(|e| e.rerr.clone()).collect(),
    })
}
