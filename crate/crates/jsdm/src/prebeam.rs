//! First-stage (statistics-only) pre-beamforming.

use nalgebra::DMatrix;

use crate::error::{JsdmError, Result};
use crate::geometry::{CovarianceSpec, GroupProfile};
use crate::linalg::{self, CMat};
use crate::spectrum::{self, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrebeamMethod {
    /// B_g = U_g.
    Eigen,
    /// B_g = first b_g eigenvectors of R_g, without any cross-group condition.
    DominantEigen,
    ApproxBd,
    Dft,
}

/// Per-group blocks B_g (M × b_g).
#[derive(Debug, Clone)]
pub struct PreBeamformer {
    pub blocks: Vec<CMat>,
    pub method: PrebeamMethod,
    pub b: Vec<usize>,
    pub r_star_used: Vec<usize>,
}

impl PreBeamformer {
    fn new(blocks: Vec<CMat>, method: PrebeamMethod, r_star_used: Vec<usize>) -> Self {
        let b = blocks.iter().map(|x| x.ncols()).collect();
        PreBeamformer { blocks, method, b, r_star_used }
    }

    pub fn groups(&self) -> usize {
        self.blocks.len()
    }

    pub fn antennas(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.nrows())
    }

    pub fn total_dim(&self) -> usize {
        self.b.iter().sum()
    }

    /// [B_1 … B_G].
    pub fn stacked(&self) -> CMat {
        linalg::hstack(&self.blocks)
    }
}

/// B_g = U_g (all nonzero eigenmodes).
pub fn eigen_beamforming(specs: &[CovarianceSpec]) -> Result<PreBeamformer> {
    let m = common_dim(specs)?;
    let total: usize = specs.iter().map(|s| s.rank).sum();
    if total > m {
        return Err(JsdmError::infeasible(format!(
            "sum of ranks {total} exceeds M = {m}; a tall unitary stack is impossible"
        )));
    }
    let blocks = specs.iter().map(|s| s.u.clone()).collect();
    Ok(PreBeamformer::new(blocks, PrebeamMethod::Eigen, specs.iter().map(|s| s.rank).collect()))
}

/// B_g = leading b_g eigenvectors of each R_g.
pub fn dominant_eigen_beamforming(specs: &[CovarianceSpec], b: &[usize]) -> Result<PreBeamformer> {
    common_dim(specs)?;
    check_len(specs.len(), b.len(), "b")?;
    let mut blocks = Vec::with_capacity(specs.len());
    for (g, (s, &bg)) in specs.iter().zip(b).enumerate() {
        if bg == 0 || bg > s.rank {
            return Err(JsdmError::infeasible(format!("group {g}: b = {bg} outside 1..={}", s.rank)));
        }
        blocks.push(s.u.columns(0, bg).into_owned());
    }
    Ok(PreBeamformer::new(blocks, PrebeamMethod::DominantEigen, b.to_vec()))
}

/// Numerical-rank threshold delimiting span(Ξ_g).
pub const SPAN_TOL: f64 = 1e-10;

/// Approximate block diagonalization: B_g = E_g^(0) G_g^(1), where E_g^(0)
/// spans the orthogonal complement of the other groups' r* dominant modes and
/// G_g^(1) holds the top b_g eigenvectors of the projected covariance.
pub fn approximate_bd(specs: &[CovarianceSpec], r_star: &[usize], b: &[usize]) -> Result<PreBeamformer> {
    let m = common_dim(specs)?;
    let g_count = specs.len();
    check_len(g_count, r_star.len(), "r_star")?;
    check_len(g_count, b.len(), "b")?;
    for (g, (s, &rs)) in specs.iter().zip(r_star).enumerate() {
        if rs == 0 || rs > s.rank {
            return Err(JsdmError::infeasible(format!("group {g}: r* = {rs} outside 1..={}", s.rank)));
        }
    }
    let total_star: usize = r_star.iter().sum();
    let mut blocks = Vec::with_capacity(g_count);
    for g in 0..g_count {
        let others = total_star - r_star[g];
        let room = m.saturating_sub(others);
        let bound = specs[g].rank.min(room);
        if b[g] == 0 {
            return Err(JsdmError::infeasible(format!("group {g}: b must be >= 1")));
        }
        if b[g] > room {
            return Err(JsdmError::infeasible(format!(
                "group {g}: b = {} exceeds M - sum of other r* = {room}",
                b[g]
            )));
        }
        if b[g] > bound {
            return Err(JsdmError::infeasible(format!(
                "group {g}: b = {} exceeds rank r = {}",
                b[g], specs[g].rank
            )));
        }
        let xi: Vec<CMat> = (0..g_count)
            .filter(|&h| h != g)
            .map(|h| specs[h].u.columns(0, r_star[h]).into_owned())
            .collect();
        let e0 = linalg::orthogonal_complement(&linalg::hstack(&xi), SPAN_TOL);
        if e0.ncols() == 0 {
            return Err(JsdmError::infeasible(format!(
                "group {g}: the other groups' dominant eigenmodes span C^M"
            )));
        }
        let rhat = linalg::hermitize(&(e0.adjoint() * &specs[g].r * &e0));
        let eig = linalg::herm_eig(&rhat);
        let tol = crate::geometry::default_rank_tol(m) * eig.values[0].max(0.0);
        let num_rank = eig.values.iter().filter(|&&l| l > tol).count();
        if num_rank < b[g] {
            return Err(JsdmError::infeasible(format!(
                "group {g}: projected covariance has numerical rank {num_rank} < b = {}",
                b[g]
            )));
        }
        blocks.push(&e0 * eig.vectors.columns(0, b[g]));
    }
    Ok(PreBeamformer::new(blocks, PrebeamMethod::ApproxBd, r_star.to_vec()))
}

/// DFT pre-beamforming for a ULA with spacing `d`. With a cap, each block
/// keeps the indices whose sampled S_g values are largest (ties: lower index).
pub fn dft_prebeamforming(profiles: &[GroupProfile], d: f64, m: usize, cap: Option<&[usize]>) -> Result<PreBeamformer> {
    if let Some(c) = cap {
        check_len(profiles.len(), c.len(), "b cap")?;
    }
    let mut sets = Vec::with_capacity(profiles.len());
    for (g, p) in profiles.iter().enumerate() {
        let sd = SpectralDensity::from_profile(d, p)?;
        let mut idx = spectrum::dft_index_set(&sd, m)?.indices;
        if let Some(c) = cap {
            if c[g] < idx.len() {
                let s = |k: usize| {
                    let v = sd.eval(spectrum::wrap_frequency(k as f64 / m as f64));
                    if v.singular { f64::INFINITY } else { v.value }
                };
                let mut scored: Vec<(f64, usize)> = idx.iter().map(|&k| (s(k), k)).collect();
                scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
                idx = scored[..c[g]].iter().map(|x| x.1).collect();
                idx.sort_unstable();
            }
        }
        sets.push(idx);
    }
    let mut owner = vec![usize::MAX; m];
    let mut collisions = Vec::new();
    for (g, set) in sets.iter().enumerate() {
        for &k in set {
            if owner[k] != usize::MAX {
                collisions.push((owner[k], g, k));
            } else {
                owner[k] = g;
            }
        }
    }
    if !collisions.is_empty() {
        let list: Vec<String> = collisions.iter().take(16).map(|(a, b, k)| format!("{k} (groups {a},{b})")).collect();
        return Err(JsdmError::infeasible(format!("DFT index sets overlap at {}", list.join(", "))));
    }
    let rs = sets.iter().map(|s| s.len()).collect();
    let blocks = sets.iter().map(|s| linalg::fourier_columns(m, s)).collect();
    Ok(PreBeamformer::new(blocks, PrebeamMethod::Dft, rs))
}

/// Result of [`tall_unitary_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TallUnitaryReport {
    pub is_tall_unitary: bool,
    /// max |[S^H S − I]_ij| of the stacked blocks S.
    pub max_offdiag: f64,
}

pub fn tall_unitary_check(blocks: &[CMat]) -> TallUnitaryReport {
    let s = linalg::hstack(blocks);
    let g = s.adjoint() * &s - CMat::identity(s.ncols(), s.ncols());
    let max_offdiag = linalg::max_abs(&g);
    TallUnitaryReport { is_tall_unitary: max_offdiag <= 1e-8, max_offdiag }
}

/// Entry (g, g') = tr(B_{g'}^H R_g B_{g'}) / tr(R_g).
pub fn bd_leakage(pb: &PreBeamformer, specs: &[CovarianceSpec]) -> Result<DMatrix<f64>> {
    check_len(pb.groups(), specs.len(), "covariances")?;
    let g = specs.len();
    let mut out = DMatrix::zeros(g, g);
    for (i, s) in specs.iter().enumerate() {
        if s.dim() != pb.antennas() {
            return Err(JsdmError::invalid("pre-beamformer and covariance dimensions differ"));
        }
        let tr = linalg::re_trace(&s.r);
        for (j, b) in pb.blocks.iter().enumerate() {
            out[(i, j)] = linalg::re_trace(&(b.adjoint() * &s.r * b)) / tr;
        }
    }
    Ok(out)
}

fn common_dim(specs: &[CovarianceSpec]) -> Result<usize> {
    let m = specs.first().ok_or_else(|| JsdmError::invalid("no groups given"))?.dim();
    if specs.iter().any(|s| s.dim() != m) {
        return Err(JsdmError::invalid("covariances have different dimensions"));
    }
    Ok(m)
}

fn check_len(want: usize, got: usize, what: &str) -> Result<()> {
    if want != got {
        return Err(JsdmError::invalid(format!("expected {want} entries for {what}, got {got}")));
    }
    Ok(())
}
