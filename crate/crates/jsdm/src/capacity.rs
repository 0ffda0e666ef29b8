//! Determinant identity and dual-MAC sum-rate factorization for tall-unitary eigenspaces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{JsdmError, Result};
use crate::linalg::{self, CMat};

#[derive(Debug, Clone)]
pub struct DualMacInstance {
    /// M × r_g eigenvector blocks.
    pub u: Vec<CMat>,
    pub lambda: Vec<Vec<f64>>,
    /// r_g × K_g channel factors.
    pub w: Vec<CMat>,
    /// Diagonal uplink input covariances (K_g entries each).
    pub s: Vec<Vec<f64>>,
    pub p: f64,
}

impl DualMacInstance {
    pub fn validate(&self) -> Result<()> {
        let g = self.u.len();
        if g == 0 || self.lambda.len() != g || self.w.len() != g || self.s.len() != g {
            return Err(JsdmError::invalid("all per-group lists must have the same non-zero length"));
        }
        let m = self.u[0].nrows();
        for i in 0..g {
            let r = self.u[i].ncols();
            if self.u[i].nrows() != m || self.lambda[i].len() != r || self.w[i].nrows() != r || self.w[i].ncols() != self.s[i].len() {
                return Err(JsdmError::invalid(format!("group {i}: inconsistent dimensions")));
            }
            if self.lambda[i].iter().chain(&self.s[i]).any(|&x| x < 0.0) {
                return Err(JsdmError::invalid(format!("group {i}: negative eigenvalue or power")));
            }
        }
        let used: f64 = self.s.iter().flatten().sum();
        if used > self.p * (1.0 + 1e-12) {
            return Err(JsdmError::invalid(format!("input power {used} exceeds P = {}", self.p)));
        }
        Ok(())
    }

    pub fn antennas(&self) -> usize {
        self.u[0].nrows()
    }

    /// A_g = Λ^{1/2} W S W^H Λ^{1/2}.
    pub fn a(&self, g: usize) -> CMat {
        let sq: Vec<f64> = self.lambda[g].iter().map(|l| l.sqrt()).collect();
        let ls = linalg::diag_real(&sq);
        let x = &ls * &self.w[g] * linalg::diag_real(&self.s[g]) * self.w[g].adjoint() * &ls;
        linalg::hermitize(&x)
    }

    /// max |[U^H U − I]_ij| of the stacked blocks.
    pub fn unitarity_defect(&self) -> f64 {
        let s = linalg::hstack(&self.u);
        linalg::max_abs(&(s.adjoint() * &s - CMat::identity(s.ncols(), s.ncols())))
    }
}

/// Instance with a Haar-random tall-unitary stack, exponential eigenvalues,
/// Gaussian W and uniform power P/ΣK.
pub fn random_instance(m: usize, r: &[usize], k: &[usize], p: f64, seed: u64) -> Result<DualMacInstance> {
    let total: usize = r.iter().sum();
    if total > m {
        return Err(JsdmError::infeasible(format!("sum of ranks {total} exceeds M = {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = linalg::complex_gaussian(&mut rng, m, total).qr().q();
    let mut off = 0;
    let mut u = Vec::new();
    for &rg in r {
        u.push(q.columns(off, rg).into_owned());
        off += rg;
    }
    instance_from_blocks(u, k, p, &mut rng)
}

/// Same structure but with independent (non-orthogonal) Gaussian blocks.
pub fn random_non_orthogonal_instance(m: usize, r: &[usize], k: &[usize], p: f64, seed: u64) -> Result<DualMacInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = r.iter().map(|&rg| linalg::complex_gaussian(&mut rng, m, rg).qr().q()).collect();
    instance_from_blocks(u, k, p, &mut rng)
}

fn instance_from_blocks(u: Vec<CMat>, k: &[usize], p: f64, rng: &mut ChaCha8Rng) -> Result<DualMacInstance> {
    if k.len() != u.len() {
        return Err(JsdmError::invalid("one user count per group is required"));
    }
    let users: usize = k.iter().sum();
    let lambda = u
        .iter()
        .map(|b| {
            let rg = b.ncols();
            (0..rg).map(|i| (-(i as f64) / rg as f64).exp()).collect()
        })
        .collect();
    let w = u.iter().zip(k).map(|(b, &kg)| linalg::complex_gaussian(rng, b.ncols(), kg)).collect();
    let s = k.iter().map(|&kg| vec![p / users as f64; kg]).collect();
    Ok(DualMacInstance { u, lambda, w, s, p })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    /// Set when the stack is not tall unitary, i.e. the identity need not hold.
    pub premise_violated: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
    }
}

/// log|I + Σ U_g A_g U_g^H| against Σ_g log|I + U_g A_g U_g^H| (natural log).
pub fn det_identity_check(inst: &DualMacInstance) -> Result<DetIdentity> {
    inst.validate()?;
    let m = inst.antennas();
    let eye = CMat::identity(m, m);
    let mut joint = eye.clone();
    let mut rhs = 0.0;
    for g in 0..inst.u.len() {
        let x = &inst.u[g] * inst.a(g) * inst.u[g].adjoint();
        rhs += linalg::log_det_hpd(&(&eye + &x))?;
        joint += x;
    }
    let lhs = linalg::log_det_hpd(&joint)?;
    Ok(DetIdentity { lhs, rhs, rel_err: rel(lhs, rhs), premise_violated: inst.unitarity_defect() > 1e-10 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualMacRates {
    pub joint_rate: f64,
    pub decoupled_rate_sum: f64,
    pub rel_err: f64,
}

/// log2|I_M + Σ U A U^H| and Σ_g log2|I_r + A_g|.
pub fn dual_mac_sum_rate(inst: &DualMacInstance) -> Result<DualMacRates> {
    inst.validate()?;
    let m = inst.antennas();
    let mut joint = CMat::identity(m, m);
    let mut dec = 0.0;
    for g in 0..inst.u.len() {
        let a = inst.a(g);
        let r = a.nrows();
        dec += linalg::log_det_hpd(&(CMat::identity(r, r) + &a))?;
        joint += &inst.u[g] * a * inst.u[g].adjoint();
    }
    let ln2 = std::f64::consts::LN_2;
    let joint_rate = linalg::log_det_hpd(&joint)? / ln2;
    let decoupled_rate_sum = dec / ln2;
    Ok(DualMacRates { joint_rate, decoupled_rate_sum, rel_err: rel(joint_rate, decoupled_rate_sum) })
}

/// Restrict every group to a subset of its users (columns of W and entries of S).
pub fn user_subset(inst: &DualMacInstance, keep: &[Vec<usize>]) -> Result<DualMacInstance> {
    if keep.len() != inst.u.len() {
        return Err(JsdmError::invalid("one index list per group is required"));
    }
    let mut out = inst.clone();
    for (g, idx) in keep.iter().enumerate() {
        if idx.iter().any(|&i| i >= inst.s[g].len()) {
            return Err(JsdmError::invalid(format!("group {g}: user index out of range")));
        }
        out.w[g] = inst.w[g].select_columns(idx);
        out.s[g] = idx.iter().map(|&i| inst.s[g][i]).collect();
    }
    Ok(out)
}
