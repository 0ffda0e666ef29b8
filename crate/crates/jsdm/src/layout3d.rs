//! 3D JSDM: annular regions separated by vertical beams, per-region planar
//! JSDM in azimuth, stream allocation per pattern and fairness across patterns.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::deteq::{self, SolverConfig, SpectralPgp};
use crate::error::{JsdmError, Result};
use crate::geometry::{self, ArrayGeometry, CovarianceSpec, EffectiveRank, GroupProfile};
use crate::linalg::{self, CMat};
use crate::prebeam::{self, PreBeamformer};
use crate::precoding::{self, PrecodingConfig, Processing, Scheme};

/// g(x) = 1/(1 + (x/d0)^delta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub delta: f64,
    pub d0: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        PathLoss { delta: 3.8, d0: 30.0 }
    }
}

impl PathLoss {
    pub fn gain(&self, x: f64) -> f64 {
        1.0 / (1.0 + (x / self.d0).powf(self.delta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutParams {
    pub cell_radius: f64,
    /// Region l sits at distance step·l.
    pub region_step: f64,
    pub regions: usize,
    pub bs_height: f64,
    pub scatter_radius: f64,
    pub pathloss: PathLoss,
    /// Horizontal (M) and vertical (N) array sizes.
    pub m: usize,
    pub n: usize,
    pub spacing: f64,
    /// Azimuth sector [−w, w].
    pub sector_half_width: f64,
    /// Extra separation between adjacent group sectors (rad).
    pub guard: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            cell_radius: 600.0,
            region_step: 60.0,
            regions: 8,
            bs_height: 50.0,
            scatter_radius: 30.0,
            pathloss: PathLoss::default(),
            m: 200,
            n: 300,
            spacing: 0.5,
            sector_half_width: PI / 3.0,
            guard: 0.01,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.cell_radius, self.region_step, self.bs_height, self.scatter_radius, self.spacing];
        if pos.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(JsdmError::invalid("layout lengths and spacing must be positive"));
        }
        if self.regions == 0 || self.m == 0 || self.n == 0 {
            return Err(JsdmError::invalid("regions, M and N must be at least 1"));
        }
        if self.region_step * self.regions as f64 > self.cell_radius + 1e-9 {
            return Err(JsdmError::invalid("outermost region lies beyond the cell radius"));
        }
        if self.scatter_radius >= self.region_step {
            return Err(JsdmError::invalid("scatter radius must be smaller than the region spacing"));
        }
        if !(self.sector_half_width > 0.0 && self.sector_half_width <= PI) || self.guard < 0.0 {
            return Err(JsdmError::invalid("sector half width must lie in (0, π] and the guard must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// 1-based region index.
    pub id: usize,
    pub distance: f64,
    pub delta_h: f64,
    pub theta_v: f64,
    pub delta_v: f64,
    /// Group centers in azimuth.
    pub azimuths: Vec<f64>,
    pub pathloss_gain: f64,
}

impl Region {
    pub fn groups(&self) -> usize {
        self.azimuths.len()
    }

    pub fn vertical_profile(&self) -> Result<GroupProfile> {
        GroupProfile::with_gain(self.theta_v, self.delta_v, 1.0, format!("V{}", self.id))
    }

    /// Horizontal group profiles with every gain multiplied by `extra`.
    pub fn horizontal_profiles(&self, extra: f64) -> Result<Vec<GroupProfile>> {
        self.azimuths
            .iter()
            .enumerate()
            .map(|(g, &t)| GroupProfile::with_gain(t, self.delta_h, self.pathloss_gain * extra, format!("R{}G{}", self.id, g)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CellLayout {
    pub params: LayoutParams,
    pub regions: Vec<Region>,
}

impl CellLayout {
    pub fn region(&self, id: usize) -> Result<&Region> {
        self.regions
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| JsdmError::invalid(format!("no region {id}")))
    }
}

/// Greedy azimuth packing: first center at −w + Δ_H, then steps of 2Δ_H + guard.
pub fn pack_azimuths(delta_h: f64, half_width: f64, guard: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = -half_width + delta_h;
    while t + delta_h <= half_width + 1e-12 {
        out.push(t);
        t += 2.0 * delta_h + guard;
    }
    out
}

pub fn build_layout(params: &LayoutParams) -> Result<CellLayout> {
    params.validate()?;
    let (h, r) = (params.bs_height, params.scatter_radius);
    let regions = (1..=params.regions)
        .map(|l| {
            let d = params.region_step * l as f64;
            let (far, near) = (((d + r) / h).atan(), ((d - r) / h).atan());
            let delta_h = (r / d).atan();
            Region {
                id: l,
                distance: d,
                delta_h,
                theta_v: 0.5 * (far + near),
                delta_v: 0.5 * (far - near),
                azimuths: pack_azimuths(delta_h, params.sector_half_width, params.guard),
                pathloss_gain: params.pathloss.gain(d),
            }
        })
        .collect();
    Ok(CellLayout { params: params.clone(), regions })
}

/// {{1,5},{2,6},{3,7},{4,8}} for eight regions: region l pairs with l + L/2.
pub fn interleaved_patterns(regions: usize) -> Vec<Vec<usize>> {
    let half = regions / 2;
    let mut out: Vec<Vec<usize>> = (1..=half).map(|l| vec![l, l + half]).collect();
    if regions % 2 == 1 {
        out.push(vec![regions]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub region_ids: Vec<usize>,
    pub nu: f64,
}

/// Patterns must partition the regions and carry shares summing to one.
pub fn validate_patterns(patterns: &[Pattern], regions: usize) -> Result<()> {
    let mut seen = vec![false; regions + 1];
    for p in patterns {
        for &r in &p.region_ids {
            if r == 0 || r > regions || seen[r] {
                return Err(JsdmError::invalid(format!("region {r} is missing or repeated in the pattern partition")));
            }
            seen[r] = true;
        }
    }
    if seen[1..].iter().any(|s| !s) {
        return Err(JsdmError::invalid("patterns do not cover every region"));
    }
    let total: f64 = patterns.iter().map(|p| p.nu).sum();
    if (total - 1.0).abs() > 1e-9 || patterns.iter().any(|p| p.nu < 0.0) {
        return Err(JsdmError::invalid(format!("pattern shares must be >= 0 and sum to 1, got {total}")));
    }
    Ok(())
}

/// Vertical covariance of a region (N-element ULA in elevation).
pub fn vertical_covariance(layout: &CellLayout, region: &Region) -> Result<CovarianceSpec> {
    let geom = ArrayGeometry::ula(layout.params.n, layout.params.spacing)?;
    let opts = geometry::CovarianceOptions { eff_rule: EffectiveRank::Fixed(1), ..Default::default() };
    geometry::one_ring_covariance_with(&geom, &region.vertical_profile()?, &opts)
}

#[derive(Debug, Clone)]
pub struct VerticalBeam {
    /// N × 1 unit vector.
    pub q: CMat,
    /// |Λ^{1/2} U^H q|² = q^H R_V q.
    pub gain2: f64,
    /// max over other regions m of |u_{V,m,1}^H q|.
    pub leakage: f64,
    /// λ_2/λ_1 of the region's own vertical covariance.
    pub next_ratio: f64,
}

impl VerticalBeam {
    pub fn gain(&self) -> f64 {
        self.gain2.sqrt()
    }
}

/// Which eigenspace of the other regions a vertical beam is orthogonal to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerticalNulling {
    /// Dominant eigenvector only.
    Dominant,
    /// The full numerical-rank eigenspace; leaves no inter-region leakage at all.
    Numerical,
}

/// q_l maximizing q^H R_{V,l} q subject to u_{V,m,1}^H q = 0 for every other region m.
pub fn vertical_beamformers(rv: &[CovarianceSpec]) -> Result<Vec<VerticalBeam>> {
    vertical_beamformers_with(rv, VerticalNulling::Dominant)
}

pub fn vertical_beamformers_with(rv: &[CovarianceSpec], nulling: VerticalNulling) -> Result<Vec<VerticalBeam>> {
    let n = rv.first().ok_or_else(|| JsdmError::invalid("no vertical covariances"))?.dim();
    let nulled: Vec<CMat> = rv
        .iter()
        .map(|s| match nulling {
            VerticalNulling::Dominant => s.u.columns(0, 1).into_owned(),
            VerticalNulling::Numerical => s.u.clone(),
        })
        .collect();
    let mut out = Vec::with_capacity(rv.len());
    for (l, spec) in rv.iter().enumerate() {
        let others: Vec<CMat> = (0..rv.len()).filter(|&m| m != l).map(|m| nulled[m].clone()).collect();
        let e0 = if others.is_empty() {
            CMat::identity(n, n)
        } else {
            linalg::orthogonal_complement(&linalg::hstack(&others), prebeam::SPAN_TOL)
        };
        if e0.ncols() == 0 {
            return Err(JsdmError::infeasible(format!(
                "region {l}: no vertical null space left; serve fewer regions per pattern"
            )));
        }
        let proj = linalg::hermitize(&(e0.adjoint() * &spec.r * &e0));
        let eig = linalg::herm_eig(&proj);
        let q = &e0 * eig.vectors.columns(0, 1);
        let gain2 = (q.adjoint() * &spec.r * &q)[(0, 0)].re.max(0.0);
        let leakage = (0..rv.len())
            .filter(|&m| m != l)
            .map(|m| linalg::max_abs(&(nulled[m].adjoint() * &q)))
            .fold(0.0, f64::max);
        let next_ratio = if spec.lambda.len() > 1 { spec.lambda[1] / spec.lambda[0] } else { 0.0 };
        out.push(VerticalBeam { q, gain2, leakage, next_ratio });
    }
    Ok(out)
}

pub fn effective_vertical_gain(q: &CMat, rv: &CovarianceSpec) -> f64 {
    (q.adjoint() * &rv.r * q)[(0, 0)].re.max(0.0).sqrt()
}

/// r* = round(M·D·(sin(θ+Δ) − sin(θ−Δ))), at least 1.
pub fn rank_rule(m: usize, d: f64, theta: f64, delta: f64) -> usize {
    let v = (m as f64 * d * ((theta + delta).sin() - (theta - delta).sin())).round();
    v.max(1.0) as usize
}

/// Planar JSDM problem of one region with its vertical gain folded into the covariances.
#[derive(Debug, Clone)]
pub struct RegionInstance {
    pub region_id: usize,
    pub vertical_gain2: f64,
    pub specs: Vec<CovarianceSpec>,
    pub pb: PreBeamformer,
    pub spectral: SpectralPgp,
    pub b: Vec<usize>,
    /// Numerical rank of each R̄_g (ZF needs S_g below it).
    pub rank_bar: Vec<usize>,
}

impl RegionInstance {
    pub fn total_dim(&self) -> usize {
        self.b.iter().sum()
    }
}

/// Builds R_g scaled by g(d)·q^H R_V q, then approximate BD with r*_g = b_g from the rank rule.
pub fn region_effective_channel(layout: &CellLayout, region: &Region, beam: &VerticalBeam) -> Result<RegionInstance> {
    let p = &layout.params;
    let geom = ArrayGeometry::ula(p.m, p.spacing)?;
    let specs: Vec<CovarianceSpec> = region
        .horizontal_profiles(beam.gain2)?
        .iter()
        .map(|prof| geometry::one_ring_covariance(&geom, prof))
        .collect::<Result<_>>()?;
    region_from_specs(region.id, beam.gain2, specs, |g| {
        rank_rule(p.m, p.spacing, region.azimuths[g], region.delta_h)
    })
}

/// Same as [`region_effective_channel`] on caller-provided covariances.
pub fn region_from_specs(region_id: usize, gain2: f64, specs: Vec<CovarianceSpec>, r_star: impl Fn(usize) -> usize) -> Result<RegionInstance> {
    if specs.is_empty() {
        return Err(JsdmError::invalid(format!("region {region_id} has no groups")));
    }
    let rs: Vec<usize> = specs.iter().enumerate().map(|(g, s)| r_star(g).clamp(1, s.rank)).collect();
    let pb = if specs.len() == 1 {
        prebeam::dominant_eigen_beamforming(&specs, &rs)?
    } else {
        prebeam::approximate_bd(&specs, &rs, &rs)?
    };
    let inputs = deteq::PgpInputs::from_prebeam(&specs, &pb)?;
    let spectral = inputs.spectral();
    let rank_bar = spectral
        .groups
        .iter()
        .map(|g| {
            let top = g.lam.iter().copied().fold(0.0, f64::max);
            g.lam.iter().filter(|&&x| x > 1e-10 * top).count()
        })
        .collect();
    Ok(RegionInstance { region_id, vertical_gain2: gain2, b: pb.b.clone(), specs, pb, spectral, rank_bar })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub alphas: Vec<f64>,
    pub streams: Vec<Vec<usize>>,
    pub region_se: Vec<f64>,
    pub sum_se: f64,
    /// Grid points evaluated (feasible ones).
    pub evaluated: usize,
}

/// S_{l,g} = ⌊α_l b_{l,g}⌋.
pub fn streams_for(region: &RegionInstance, alpha: f64) -> Vec<usize> {
    region.b.iter().map(|&b| (alpha * b as f64 + 1e-9).floor() as usize).collect()
}

/// Deterministic-equivalent sum SE of one region at per-stream power `p_bar`.
pub fn region_sum_se(region: &RegionInstance, streams: &[usize], p_bar: f64, alpha: f64, scheme: Scheme, cfg: &SolverConfig) -> Result<f64> {
    let active: Vec<usize> = (0..streams.len()).filter(|&g| streams[g] > 0).collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let sub = region.spectral.subset(&active);
    let s: Vec<usize> = active.iter().map(|&g| streams[g]).collect();
    let p_region = p_bar * s.iter().sum::<usize>() as f64;
    let sol = match scheme {
        Scheme::Rzf => deteq::deteq_pgp_rzf_spectral(&sub, &s, p_region, alpha, cfg)?,
        Scheme::Zf => deteq::deteq_pgp_zf_spectral(&sub, &s, p_region, cfg)?,
    };
    Ok(sol.sum_se(&s))
}

/// Exhaustive search over α ∈ grid^|regions| with equal power P/ΣS.
/// Ties keep the first grid point in lexicographic order.
pub fn stream_allocation_search(regions: &[&RegionInstance], scheme: Scheme, p: f64, grid: &[f64], cfg: &SolverConfig) -> Result<AllocationResult> {
    if regions.is_empty() || grid.is_empty() {
        return Err(JsdmError::invalid("need at least one region and one grid value"));
    }
    if grid.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
        return Err(JsdmError::invalid("alpha grid values must lie in (0, 1]"));
    }
    let b_tot: usize = regions.iter().map(|r| r.total_dim()).sum();
    let per_region: Vec<Vec<Vec<usize>>> = regions.iter().map(|r| grid.iter().map(|&a| streams_for(r, a)).collect()).collect();
    let mut idx = vec![0usize; regions.len()];
    let mut best: Option<AllocationResult> = None;
    let mut evaluated = 0;
    loop {
        let streams: Vec<Vec<usize>> = idx.iter().enumerate().map(|(l, &i)| per_region[l][i].clone()).collect();
        let s_tot: usize = streams.iter().flatten().sum();
        let zf_ok = scheme == Scheme::Rzf
            || regions.iter().zip(&streams).all(|(r, s)| s.iter().zip(&r.rank_bar).all(|(&sg, &rk)| sg == 0 || sg < rk));
        if s_tot > 0 && zf_ok {
            let p_bar = p / s_tot as f64;
            let alpha = s_tot as f64 / (b_tot as f64 * p);
            let region_se: Vec<f64> = regions
                .iter()
                .zip(&streams)
                .map(|(r, s)| region_sum_se(r, s, p_bar, alpha, scheme, cfg))
                .collect::<Result<_>>()?;
            let sum_se: f64 = region_se.iter().sum();
            evaluated += 1;
            if best.as_ref().is_none_or(|b| sum_se > b.sum_se) {
                best = Some(AllocationResult {
                    alphas: idx.iter().map(|&i| grid[i]).collect(),
                    streams: streams.clone(),
                    region_se,
                    sum_se,
                    evaluated: 0,
                });
            }
        }
        // odometer over the grid
        let mut k = regions.len();
        loop {
            if k == 0 {
                let mut out = best.ok_or_else(|| JsdmError::infeasible("every grid point allocates zero streams"))?;
                out.evaluated = evaluated;
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < grid.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// 0.05, 0.10, …, 1.00.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fairness {
    Pfs,
    MaxMin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessResult {
    pub nu: Vec<f64>,
    /// ν_q R*_q.
    pub scheduled: Vec<f64>,
    pub total: f64,
    /// Σ R*_q without time sharing.
    pub raw_total: f64,
}

/// PFS: ν_q = 1/Q. MaxMin: ν_q ∝ 1/R*_q.
pub fn fairness_allocate(r_star: &[f64], crit: Fairness) -> Result<FairnessResult> {
    if r_star.is_empty() {
        return Err(JsdmError::invalid("no patterns given"));
    }
    if let Some(q) = r_star.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(JsdmError::invalid(format!("pattern {q} has non-positive rate {}", r_star[q])));
    }
    let q = r_star.len() as f64;
    let nu: Vec<f64> = match crit {
        Fairness::Pfs => vec![1.0 / q; r_star.len()],
        Fairness::MaxMin => {
            let inv: f64 = r_star.iter().map(|r| 1.0 / r).sum();
            r_star.iter().map(|r| (1.0 / r) / inv).collect()
        }
    };
    let scheduled: Vec<f64> = nu.iter().zip(r_star).map(|(n, r)| n * r).collect();
    Ok(FairnessResult {
        total: scheduled.iter().sum(),
        raw_total: r_star.iter().sum(),
        nu,
        scheduled,
    })
}

/// Every region instance of a layout, paired per pattern.
#[derive(Debug, Clone)]
pub struct LayoutInstance {
    pub layout: CellLayout,
    pub patterns: Vec<Vec<usize>>,
    pub beams: Vec<Vec<VerticalBeam>>,
    pub regions: Vec<Vec<RegionInstance>>,
}

pub fn instantiate(layout: &CellLayout, patterns: &[Vec<usize>]) -> Result<LayoutInstance> {
    let mut beams = Vec::new();
    let mut regions = Vec::new();
    for pat in patterns {
        let reg: Vec<&Region> = pat.iter().map(|&id| layout.region(id)).collect::<Result<_>>()?;
        let rv: Vec<CovarianceSpec> = reg.iter().map(|r| vertical_covariance(layout, r)).collect::<Result<_>>()?;
        let vb = vertical_beamformers(&rv)?;
        let inst: Vec<RegionInstance> = reg.iter().zip(&vb).map(|(r, b)| region_effective_channel(layout, r, b)).collect::<Result<_>>()?;
        beams.push(vb);
        regions.push(inst);
    }
    Ok(LayoutInstance { layout: layout.clone(), patterns: patterns.to_vec(), beams, regions })
}

#[derive(Debug, Clone)]
pub struct PatternTable {
    pub scheme: Scheme,
    pub allocations: Vec<AllocationResult>,
    pub pfs: FairnessResult,
    pub maxmin: FairnessResult,
}

/// Best allocation per pattern, then both fairness criteria.
pub fn evaluate_patterns(inst: &LayoutInstance, scheme: Scheme, p: f64, grid: &[f64], cfg: &SolverConfig) -> Result<PatternTable> {
    let allocations: Vec<AllocationResult> = inst
        .regions
        .iter()
        .map(|regs| {
            let r: Vec<&RegionInstance> = regs.iter().collect();
            stream_allocation_search(&r, scheme, p, grid, cfg)
        })
        .collect::<Result<_>>()?;
    let r_star: Vec<f64> = allocations.iter().map(|a| a.sum_se).collect();
    Ok(PatternTable {
        scheme,
        pfs: fairness_allocate(&r_star, Fairness::Pfs)?,
        maxmin: fairness_allocate(&r_star, Fairness::MaxMin)?,
        allocations,
    })
}

/// Inputs of the full-dimensional Kronecker Monte Carlo for one pattern.
#[derive(Debug, Clone)]
pub struct KroneckerRegion {
    /// Horizontal covariances before vertical folding (pathloss only).
    pub horizontal: Vec<CovarianceSpec>,
    pub vertical: CovarianceSpec,
    pub streams: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KroneckerReport {
    /// Mean sum SE with full M·N channels and x = Σ (B_l P_l d_l) ⊗ q_l.
    pub full_se: f64,
    /// Mean sum SE of independent per-region planar simulations.
    pub planar_se: f64,
    pub rel_diff: f64,
    /// Mean inter-region interference power relative to signal power.
    pub inter_region_ratio: f64,
}

/// Full M·N simulation against the per-region planar reduction (PGP-RZF, α = S/(bP)).
pub fn kronecker_consistency(regions: &[KroneckerRegion], nulling: VerticalNulling, p: f64, draws: usize, seed: u64) -> Result<KroneckerReport> {
    if regions.is_empty() || draws == 0 {
        return Err(JsdmError::invalid("need regions and at least one draw"));
    }
    let rv: Vec<CovarianceSpec> = regions.iter().map(|r| r.vertical.clone()).collect();
    let beams = vertical_beamformers_with(&rv, nulling)?;
    let inst: Vec<RegionInstance> = regions
        .iter()
        .zip(&beams)
        .enumerate()
        .map(|(l, (r, b))| {
            let scaled: Vec<CovarianceSpec> = r.horizontal.iter().map(|s| s.scaled(b.gain2)).collect();
            let rs: Vec<usize> = r.horizontal.iter().map(|s| s.r_star).collect();
            region_from_specs(l + 1, b.gain2, scaled, |g| rs[g])
        })
        .collect::<Result<_>>()?;
    let s_tot: usize = regions.iter().flat_map(|r| r.streams.iter()).sum();
    let b_tot: usize = inst.iter().map(|r| r.total_dim()).sum();
    let alpha = s_tot as f64 / (b_tot as f64 * p);
    let ps = p / s_tot as f64;
    // A = U Λ^{1/2} factors for sampling H = A_H W A_V^T
    let factor = |s: &CovarianceSpec| -> CMat {
        let sq: Vec<f64> = s.lambda.iter().map(|l| l.max(0.0).sqrt()).collect();
        &s.u * linalg::diag_real(&sq)
    };
    let ah: Vec<Vec<CMat>> = regions.iter().map(|r| r.horizontal.iter().map(factor).collect()).collect();
    let av: Vec<CMat> = regions.iter().map(|r| factor(&r.vertical)).collect();
    let qc: Vec<CMat> = beams.iter().map(|b| b.q.map(|z| z.conj())).collect();
    let design = |l: usize, h_groups: &[CMat]| -> Result<CMat> {
        let mut cfg = PrecodingConfig::new(Scheme::Rzf, Processing::Pgp, p, regions[l].streams.clone());
        cfg.alpha = Some(alpha);
        let heff = precoding::effective_channels(Processing::Pgp, Some(&inst[l].pb), h_groups)?;
        let pre = precoding::design_precoders(&cfg, Some(&inst[l].pb), &heff)?;
        precoding::transmit_matrix(Processing::Pgp, Some(&inst[l].pb), &pre)
    };
    let split = |all: &CMat, streams: &[usize]| -> Vec<CMat> {
        let mut off = 0;
        streams
            .iter()
            .map(|&k| {
                let c = all.columns(off, k).into_owned();
                off += k;
                c
            })
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut full_acc, mut leak_acc) = (0.0, 0.0);
    for _ in 0..draws {
        // proj[l][l'] = H conj(q_l') for users of region l, M × S_l
        let mut proj: Vec<Vec<CMat>> = Vec::with_capacity(regions.len());
        for (l, r) in regions.iter().enumerate() {
            let mut per_target: Vec<Vec<CMat>> = vec![Vec::new(); regions.len()];
            for (g, &k) in r.streams.iter().enumerate() {
                for _ in 0..k {
                    let w = linalg::complex_gaussian(&mut rng, ah[l][g].ncols(), av[l].ncols());
                    let h = &ah[l][g] * w * av[l].transpose();
                    for (t, q) in qc.iter().enumerate() {
                        per_target[t].push(&h * q);
                    }
                }
            }
            proj.push(per_target.into_iter().map(|cols| linalg::hstack(&cols)).collect());
        }
        let v: Vec<CMat> = (0..regions.len())
            .map(|l| design(l, &split(&proj[l][l], &regions[l].streams)))
            .collect::<Result<_>>()?;
        for l in 0..regions.len() {
            let own = proj[l][l].adjoint() * &v[l];
            let cross: Vec<CMat> = (0..regions.len()).filter(|&t| t != l).map(|t| proj[l][t].adjoint() * &v[t]).collect();
            for k in 0..own.nrows() {
                let sig = own[(k, k)].norm_sqr();
                let intra: f64 = own.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>() - sig;
                let inter: f64 = cross.iter().map(|c| c.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
                full_acc += (1.0 + ps * sig / (1.0 + ps * (intra + inter))).log2();
                leak_acc += inter / sig.max(f64::MIN_POSITIVE);
            }
        }
    }
    // independent planar draws from g(d)·q^H R_V q·R_H
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut planar_acc = 0.0;
    for _ in 0..draws {
        for l in 0..regions.len() {
            let h: Vec<CMat> = inst[l]
                .specs
                .iter()
                .zip(&regions[l].streams)
                .map(|(s, &k)| geometry::sample_channels_rng(s, k, &mut rng))
                .collect();
            let v = design(l, &h)?;
            let sinr = precoding::sinr_from_transmit(&linalg::hstack(&h), &v, ps * v.ncols() as f64)?;
            planar_acc += sinr.iter().map(|g| (1.0 + g).log2()).sum::<f64>();
        }
    }
    let n = draws as f64;
    let (full_se, planar_se) = (full_acc / n, planar_acc / n);
    Ok(KroneckerReport {
        full_se,
        planar_se,
        rel_diff: (full_se - planar_se).abs() / planar_se,
        inter_region_ratio: leak_acc / (n * s_tot as f64),
    })
}
