//! Deterministic-equivalent SINRs for RZF/ZF with joint and per-group processing.
//!
//! The JGP system couples every group through one b × b matrix T and is
//! solved densely. Per-group systems decouple, so each group is solved in the
//! eigenbasis of its own (estimated) covariance, where T is diagonal and each
//! trace collapses to a sum over eigenvalues. [`deteq_pgp_rzf_dense`] keeps the
//! matrix form for cross-checking.

use nalgebra::DMatrix;

use crate::error::{JsdmError, Result};
use crate::geometry::CovarianceSpec;
use crate::linalg::{self, CMat, C64};
use crate::prebeam::PreBeamformer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// m <- (1 - d) m_new + d m_old.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-9, max_iter: 2000, damping: 0.0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(JsdmError::invalid("solver tolerance must be positive"));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(JsdmError::invalid("damping must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Regularization of the resolvent T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    /// T = (Σ ℓ_g R_g/(1+m_g) + α I)^{-1}.
    Alpha(f64),
    /// T = (Σ ℓ_g R_g/m_g + I)^{-1}.
    Zf,
}

impl Regularizer {
    fn q(&self, m: f64) -> f64 {
        match self {
            Regularizer::Alpha(_) => 1.0 + m,
            Regularizer::Zf => m,
        }
    }

    fn shift(&self) -> f64 {
        match self {
            Regularizer::Alpha(a) => *a,
            Regularizer::Zf => 1.0,
        }
    }

    fn is_zf(&self) -> bool {
        matches!(self, Regularizer::Zf)
    }

    fn validate(&self) -> Result<()> {
        if let Regularizer::Alpha(a) = self {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(JsdmError::invalid(format!("alpha must be positive, got {a}")));
            }
        }
        Ok(())
    }
}

/// Iterations without residual decrease before damping 0.5 is switched on.
pub const AUTO_DAMP_AFTER: usize = 200;
const ZF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Picard {
    m: Vec<f64>,
    iterations: usize,
    residual: f64,
}

fn picard(init: Vec<f64>, zf: bool, cfg: &SolverConfig, mut step: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Picard> {
    cfg.validate()?;
    let mut m = init;
    let mut d = cfg.damping;
    let mut prev = f64::INFINITY;
    let mut stalled = 0;
    let mut trace = Vec::new();
    for it in 1..=cfg.max_iter {
        let next = step(&m)?;
        if let Some((g, v)) = next.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(JsdmError::infeasible(format!("group {g}: resolvent trace became {v}; inputs are invalid")));
        }
        if zf {
            if let Some(g) = next.iter().position(|&v| v < ZF_FLOOR) {
                return Err(JsdmError::infeasible(format!(
                    "group {g}: ZF resolvent collapsed to zero; reduce the stream count"
                )));
            }
        }
        let res = next.iter().zip(&m).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())).fold(0.0, f64::max);
        trace.push(res);
        if res <= cfg.tol {
            return Ok(Picard { m: next, iterations: it, residual: res });
        }
        if res >= prev {
            stalled += 1;
            if stalled >= AUTO_DAMP_AFTER && d == 0.0 {
                d = 0.5;
            }
        }
        prev = res;
        m = next.iter().zip(&m).map(|(a, b)| (1.0 - d) * a + d * b).collect();
    }
    let n = trace.len();
    Err(JsdmError::NonConvergence {
        iterations: cfg.max_iter,
        residual: trace.last().copied().unwrap_or(f64::NAN),
        trace: trace[n.saturating_sub(32)..].to_vec(),
    })
}

/// Fixed point of m_g = (1/b) tr(R_g T) and T.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub m: Vec<f64>,
    pub t: CMat,
    pub iterations: usize,
    pub residual: f64,
}

fn resolvent_t(blocks: &[CMat], loading: &[f64], reg: Regularizer, m: &[f64]) -> Result<CMat> {
    let b = blocks[0].nrows();
    let mut a = CMat::identity(b, b) * C64::new(reg.shift(), 0.0);
    for ((r, &l), &mg) in blocks.iter().zip(loading).zip(m) {
        a += r * C64::new(l / reg.q(mg), 0.0);
    }
    linalg::hpd_inverse(&a)
}

/// Picard iteration from m = 1 on T = (Σ ℓ_g R_g/q(m_g) + a I)^{-1}, with per-block
/// loading ℓ_g = S_g/b.
pub fn solve_resolvent(blocks: &[CMat], loading: &[f64], reg: Regularizer, cfg: &SolverConfig) -> Result<Resolvent> {
    solve_resolvent_from(blocks, loading, reg, cfg, &vec![1.0; blocks.len()])
}

pub fn solve_resolvent_from(blocks: &[CMat], loading: &[f64], reg: Regularizer, cfg: &SolverConfig, init: &[f64]) -> Result<Resolvent> {
    reg.validate()?;
    if blocks.is_empty() || blocks.len() != loading.len() || init.len() != blocks.len() {
        return Err(JsdmError::invalid("blocks, loadings and start values must have equal non-zero length"));
    }
    let b = blocks[0].nrows();
    if blocks.iter().any(|x| x.shape() != (b, b)) {
        return Err(JsdmError::invalid("covariance blocks must all be b × b"));
    }
    let bf = b as f64;
    let pic = picard(init.to_vec(), reg.is_zf(), cfg, |m| {
        let t = resolvent_t(blocks, loading, reg, m)?;
        Ok(blocks.iter().map(|r| linalg::trace_prod(r, &t) / bf).collect())
    })?;
    let t = resolvent_t(blocks, loading, reg, &pic.m)?;
    Ok(Resolvent { m: pic.m, t, iterations: pic.iterations, residual: pic.residual })
}

#[derive(Debug, Clone)]
pub struct DetEqSolution {
    pub m: Vec<f64>,
    /// T (JGP: one matrix; dense PGP: one per group; spectral paths leave this empty).
    pub t: Vec<CMat>,
    /// Γ° (JGP: one value; PGP: per group).
    pub gamma_big: Vec<f64>,
    pub upsilon: Vec<f64>,
    /// Estimation-error functional (zero for perfect CSIT).
    pub e_o: Vec<f64>,
    pub zeta2: Vec<f64>,
    /// Per-group deterministic SINR.
    pub gamma: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl DetEqSolution {
    /// Σ_g S_g log2(1 + γ_g).
    pub fn sum_se(&self, streams: &[usize]) -> f64 {
        self.gamma.iter().zip(streams).map(|(g, &s)| s as f64 * (1.0 + g).log2()).sum()
    }

    pub fn gamma_db(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| 10.0 * g.log10()).collect()
    }
}

fn check_streams(streams: &[usize], groups: usize) -> Result<f64> {
    if streams.len() != groups {
        return Err(JsdmError::invalid(format!("expected {groups} stream counts, got {}", streams.len())));
    }
    if streams.iter().any(|&s| s == 0) {
        return Err(JsdmError::invalid("every group needs at least one stream"));
    }
    Ok(streams.iter().sum::<usize>() as f64)
}

/// Joint-group RZF. `rtilde[g] = B^H R_g B` (b × b) and `bb = B^H B`.
pub fn deteq_jgp_rzf(rtilde: &[CMat], bb: &CMat, streams: &[usize], p: f64, alpha: f64, cfg: &SolverConfig) -> Result<DetEqSolution> {
    let g_n = rtilde.len();
    let s_tot = check_streams(streams, g_n)?;
    let b = bb.nrows();
    let bf = b as f64;
    let loading: Vec<f64> = streams.iter().map(|&s| s as f64 / bf).collect();
    let res = solve_resolvent(rtilde, &loading, Regularizer::Alpha(alpha), cfg)?;
    let (m, t) = (&res.m, &res.t);
    let rt: Vec<CMat> = rtilde.iter().map(|r| r * t).collect();
    // [J]_{g,g'} = (S_g'/b) tr(R_g T R_g' T) / (b (1 + m_g')²)
    let mut j = DMatrix::<f64>::zeros(g_n, g_n);
    let mut tr_rr = DMatrix::<f64>::zeros(g_n, g_n);
    for g in 0..g_n {
        for h in 0..g_n {
            tr_rr[(g, h)] = linalg::trace_prod(&rt[g], &rt[h]);
            j[(g, h)] = loading[h] * tr_rr[(g, h)] / (bf * (1.0 + m[h]).powi(2));
        }
    }
    let lu = (DMatrix::<f64>::identity(g_n, g_n) - &j).lu();
    let solve = |v: nalgebra::DVector<f64>| -> Result<nalgebra::DVector<f64>> {
        lu.solve(&v).ok_or_else(|| JsdmError::Singular("I - J is singular".into()))
    };
    let tbbt = t * bb * t;
    let v = nalgebra::DVector::from_iterator(g_n, rtilde.iter().map(|r| linalg::trace_prod(r, &tbbt) / bf));
    let n = solve(v)?;
    let share = |h: usize| p * streams[h] as f64 / s_tot;
    let gamma_big: f64 = (0..g_n).map(|h| share(h) * n[h] / (1.0 + m[h]).powi(2)).sum::<f64>() / bf;
    let zeta2 = p / gamma_big;
    let mut upsilon = Vec::with_capacity(g_n);
    let mut gamma = Vec::with_capacity(g_n);
    for g in 0..g_n {
        let vg = nalgebra::DVector::from_iterator(g_n, (0..g_n).map(|h| tr_rr[(h, g)] / bf));
        let ng = solve(vg)?;
        let mut u = 0.0;
        for h in 0..g_n {
            let w = if h == g { p / s_tot * (streams[g] as f64 - 1.0) } else { share(h) };
            u += w * ng[h] / (1.0 + m[h]).powi(2);
        }
        u /= bf;
        let q = 1.0 + m[g];
        gamma.push(p / s_tot * zeta2 * m[g] * m[g] / (zeta2 * u + q * q));
        upsilon.push(u);
    }
    Ok(DetEqSolution {
        m: res.m.clone(),
        t: vec![res.t],
        gamma_big: vec![gamma_big],
        upsilon,
        e_o: vec![0.0; g_n],
        zeta2: vec![zeta2],
        gamma,
        iterations: res.iterations,
        residual: res.residual,
    })
}

/// Second-order inputs of a per-group scheme.
#[derive(Debug, Clone)]
pub struct PgpInputs {
    /// R̄_g = B_g^H R_g B_g.
    pub rbar: Vec<CMat>,
    /// Covariance the precoder is designed on (R̄_g for ideal CSIT, R̂_g otherwise).
    pub rhat: Vec<CMat>,
    /// B_g^H B_g.
    pub bb: Vec<CMat>,
    /// cross[h][g] = B_h^H R_g B_h: group g's channel seen through group h's beams.
    pub cross: Vec<Vec<CMat>>,
}

impl PgpInputs {
    pub fn from_prebeam(specs: &[CovarianceSpec], pb: &PreBeamformer) -> Result<Self> {
        if specs.len() != pb.groups() {
            return Err(JsdmError::invalid("one covariance per group is required"));
        }
        let rbar: Vec<CMat> = pb
            .blocks
            .iter()
            .zip(specs)
            .map(|(b, s)| linalg::hermitize(&(b.adjoint() * &s.r * b)))
            .collect();
        let cross = pb
            .blocks
            .iter()
            .map(|b| specs.iter().map(|s| linalg::hermitize(&(b.adjoint() * &s.r * b))).collect())
            .collect();
        Ok(PgpInputs {
            rhat: rbar.clone(),
            rbar,
            bb: pb.blocks.iter().map(|b| b.adjoint() * b).collect(),
            cross,
        })
    }

    /// Replace the design covariances with estimate covariances.
    pub fn with_estimates(mut self, rhat: Vec<CMat>) -> Result<Self> {
        if rhat.len() != self.rbar.len() || rhat.iter().zip(&self.rbar).any(|(a, b)| a.shape() != b.shape()) {
            return Err(JsdmError::invalid("estimate covariances must match R̄ in count and shape"));
        }
        self.rhat = rhat;
        Ok(self)
    }

    pub fn groups(&self) -> usize {
        self.rbar.len()
    }

    /// Spectral form in the eigenbasis of each R̂_g.
    pub fn spectral(&self) -> SpectralPgp {
        let groups = self
            .rhat
            .iter()
            .enumerate()
            .map(|(h, rh)| {
                let e = linalg::herm_eig(rh);
                let v = &e.vectors;
                let dg = |x: &CMat| -> Vec<f64> {
                    let y = v.adjoint() * x * v;
                    (0..y.nrows()).map(|i| y[(i, i)].re).collect()
                };
                GroupSpectrum {
                    lam: e.values.iter().map(|&l| l.max(0.0)).collect(),
                    rbar: dg(&self.rbar[h]),
                    bb: dg(&self.bb[h]),
                    cross: self.cross[h].iter().map(dg).collect(),
                }
            })
            .collect();
        SpectralPgp { groups }
    }
}

/// Diagonals of every matrix a per-group solve needs, in the eigenbasis of R̂_g.
#[derive(Debug, Clone)]
pub struct GroupSpectrum {
    pub lam: Vec<f64>,
    pub rbar: Vec<f64>,
    pub bb: Vec<f64>,
    /// cross[g] = diag(V^H B_h^H R_g B_h V) for this group h.
    pub cross: Vec<Vec<f64>>,
}

impl GroupSpectrum {
    pub fn dim(&self) -> usize {
        self.lam.len()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralPgp {
    pub groups: Vec<GroupSpectrum>,
}

impl SpectralPgp {
    /// Keeps only the listed groups (e.g. those with at least one stream).
    pub fn subset(&self, keep: &[usize]) -> SpectralPgp {
        SpectralPgp {
            groups: keep
                .iter()
                .map(|&h| {
                    let g = &self.groups[h];
                    GroupSpectrum {
                        lam: g.lam.clone(),
                        rbar: g.rbar.clone(),
                        bb: g.bb.clone(),
                        cross: keep.iter().map(|&k| g.cross[k].clone()).collect(),
                    }
                })
                .collect(),
        }
    }
}

/// Per-group quantities after the fixed point.
struct GroupSolve {
    m: f64,
    q: f64,
    b: f64,
    /// Diagonal of T.
    t: Vec<f64>,
    /// 1 − (S/b) tr(R̂TR̂T)/(b q²).
    den: f64,
    iterations: usize,
    residual: f64,
}

impl GroupSolve {
    /// (1/b) tr(R̂ T X T) / den for diagonal X.
    fn n_of(&self, lam: &[f64], x: &[f64]) -> f64 {
        lam.iter().zip(&self.t).zip(x).map(|((l, t), x)| l * t * t * x).sum::<f64>() / self.b / self.den
    }
}

fn solve_group(gs: &GroupSpectrum, s_g: usize, reg: Regularizer, cfg: &SolverConfig) -> Result<GroupSolve> {
    reg.validate()?;
    let b = gs.dim() as f64;
    if reg.is_zf() {
        // a positive ZF fixed point needs rank(R̂) > S_g
        let top = gs.lam.iter().copied().fold(0.0, f64::max);
        let rank = gs.lam.iter().filter(|&&x| x > 1e-10 * top).count();
        if rank <= s_g {
            return Err(JsdmError::infeasible(format!(
                "ZF with {s_g} streams needs an effective covariance of rank > {s_g}, got {rank}; reduce the stream count"
            )));
        }
    }
    let l = s_g as f64 / b;
    let a = reg.shift();
    let tdiag = |m: f64| -> Vec<f64> { gs.lam.iter().map(|&x| 1.0 / (l * x / reg.q(m) + a)).collect() };
    let pic = picard(vec![1.0], reg.is_zf(), cfg, |m| {
        let t = tdiag(m[0]);
        Ok(vec![gs.lam.iter().zip(&t).map(|(x, t)| x * t).sum::<f64>() / b])
    })?;
    let m = pic.m[0];
    let q = reg.q(m);
    let t = tdiag(m);
    let rr: f64 = gs.lam.iter().zip(&t).map(|(x, t)| x * x * t * t).sum();
    let den = 1.0 - l * rr / (b * q * q);
    if !(den > 0.0) {
        return Err(JsdmError::Singular(format!("1 - (S/b) tr(RTRT)/(b q²) = {den:.3e} is not positive")));
    }
    Ok(GroupSolve { m, q, b, t, den, iterations: pic.iterations, residual: pic.residual })
}

fn pgp_generic(sp: &SpectralPgp, streams: &[usize], p: f64, reg: Regularizer, cfg: &SolverConfig) -> Result<DetEqSolution> {
    let g_n = sp.groups.len();
    let s_tot = check_streams(streams, g_n)?;
    let ps = p / s_tot;
    let solves: Vec<GroupSolve> = sp
        .groups
        .iter()
        .zip(streams)
        .map(|(gs, &s)| solve_group(gs, s, reg, cfg))
        .collect::<Result<_>>()?;
    let mut zeta2 = Vec::with_capacity(g_n);
    let mut gamma_big = Vec::with_capacity(g_n);
    let mut e_o = Vec::with_capacity(g_n);
    for (gs, (so, &s)) in sp.groups.iter().zip(solves.iter().zip(streams)) {
        let n = so.n_of(&gs.lam, &gs.bb);
        let gb = n / (so.b * so.q * so.q);
        // Γ̄_g = (1/b)(P S_g/S) n/q², so ζ̄² = (P S_g/S)/Γ̄_g = b q²/n
        gamma_big.push(ps * s as f64 * gb);
        zeta2.push(1.0 / gb);
        let err: Vec<f64> = gs.rbar.iter().zip(&gs.lam).map(|(r, l)| r - l).collect();
        e_o.push(so.n_of(&gs.lam, &err) / so.b);
    }
    let mut upsilon = Vec::with_capacity(g_n);
    let mut gamma = Vec::with_capacity(g_n);
    for g in 0..g_n {
        let (gs, so) = (&sp.groups[g], &solves[g]);
        let (m, q, sg) = (so.m, so.q, streams[g] as f64);
        let mut inter = 0.0;
        for h in 0..g_n {
            if h != g {
                let sh = &solves[h];
                let n_hg = sh.n_of(&sp.groups[h].lam, &sp.groups[h].cross[g]);
                inter += ps * zeta2[h] * streams[h] as f64 / sh.b * n_hg / (sh.q * sh.q);
            }
        }
        let (z2, e) = (zeta2[g], e_o[g]);
        if reg.is_zf() {
            upsilon.push(ps * (sg - 1.0) * e / (m * m));
            gamma.push(ps * z2 / (1.0 + ps * z2 * sg * e / (m * m) + inter));
        } else {
            let a1 = (sg - 1.0) / so.b * so.n_of(&gs.lam, &gs.rbar) / (q * q);
            let a2 = (sg - 1.0) / so.b * so.n_of(&gs.lam, &gs.lam) / (q * q);
            let u = q * q * a1 - (2.0 * m * q - m * m) * a2;
            upsilon.push(ps * u);
            gamma.push(ps * z2 * m * m / (ps * z2 * e + ps * z2 * u + (1.0 + inter) * q * q));
        }
    }
    Ok(DetEqSolution {
        m: solves.iter().map(|s| s.m).collect(),
        t: Vec::new(),
        gamma_big,
        upsilon,
        e_o,
        zeta2,
        gamma,
        iterations: solves.iter().map(|s| s.iterations).max().unwrap_or(0),
        residual: solves.iter().map(|s| s.residual).fold(0.0, f64::max),
    })
}

/// Per-group RZF with ideal CSIT.
pub fn deteq_pgp_rzf(inputs: &PgpInputs, streams: &[usize], p: f64, alpha: f64, cfg: &SolverConfig) -> Result<DetEqSolution> {
    let mut ideal = inputs.clone();
    ideal.rhat = ideal.rbar.clone();
    deteq_pgp_rzf_spectral(&ideal.spectral(), streams, p, alpha, cfg)
}

/// Same as [`deteq_pgp_rzf`] on precomputed spectra (R̂ = R̄ expected).
pub fn deteq_pgp_rzf_spectral(sp: &SpectralPgp, streams: &[usize], p: f64, alpha: f64, cfg: &SolverConfig) -> Result<DetEqSolution> {
    pgp_generic(sp, streams, p, Regularizer::Alpha(alpha), cfg)
}

/// Per-group RZF designed on estimated channels (covariance R̂_g).
pub fn deteq_pgp_rzf_csit(inputs: &PgpInputs, streams: &[usize], p: f64, alpha: f64, cfg: &SolverConfig) -> Result<DetEqSolution> {
    pgp_generic(&inputs.spectral(), streams, p, Regularizer::Alpha(alpha), cfg)
}

/// Per-group ZF designed on estimated channels.
pub fn deteq_pgp_zf_csit(inputs: &PgpInputs, streams: &[usize], p: f64, cfg: &SolverConfig) -> Result<DetEqSolution> {
    pgp_generic(&inputs.spectral(), streams, p, Regularizer::Zf, cfg)
}

/// Spectral ZF entry point, used by the 3D search.
pub fn deteq_pgp_zf_spectral(sp: &SpectralPgp, streams: &[usize], p: f64, cfg: &SolverConfig) -> Result<DetEqSolution> {
    pgp_generic(sp, streams, p, Regularizer::Zf, cfg)
}

/// Per-group RZF with ideal CSIT evaluated with dense matrices throughout.
pub fn deteq_pgp_rzf_dense(inputs: &PgpInputs, streams: &[usize], p: f64, alpha: f64, cfg: &SolverConfig) -> Result<DetEqSolution> {
    let g_n = inputs.groups();
    let s_tot = check_streams(streams, g_n)?;
    let ps = p / s_tot;
    let mut res = Vec::with_capacity(g_n);
    for (r, &s) in inputs.rbar.iter().zip(streams) {
        let b = r.nrows() as f64;
        res.push(solve_resolvent(std::slice::from_ref(r), &[s as f64 / b], Regularizer::Alpha(alpha), cfg)?);
    }
    let mut den = Vec::with_capacity(g_n);
    let mut zeta2 = Vec::with_capacity(g_n);
    let mut gamma_big = Vec::with_capacity(g_n);
    for g in 0..g_n {
        let (r, t, m) = (&inputs.rbar[g], &res[g].t, res[g].m[0]);
        let b = r.nrows() as f64;
        let rt = r * t;
        let d = 1.0 - streams[g] as f64 / b * linalg::trace_prod(&rt, &rt) / (b * (1.0 + m).powi(2));
        den.push(d);
        let n = linalg::trace_prod(&rt, &(&inputs.bb[g] * t)) / b / d;
        let gb = ps * streams[g] as f64 * n / (b * (1.0 + m).powi(2));
        gamma_big.push(gb);
        zeta2.push(ps * streams[g] as f64 / gb);
    }
    let mut upsilon = Vec::with_capacity(g_n);
    let mut gamma = Vec::with_capacity(g_n);
    for g in 0..g_n {
        let (r, t, m) = (&inputs.rbar[g], &res[g].t, res[g].m[0]);
        let b = r.nrows() as f64;
        let rt = r * t;
        let ngg = linalg::trace_prod(&rt, &rt) / b / den[g];
        let ugg = ps * (streams[g] as f64 - 1.0) / b * ngg / (1.0 + m).powi(2);
        let mut inter = 0.0;
        for h in 0..g_n {
            if h != g {
                let (th, mh) = (&res[h].t, res[h].m[0]);
                let bh = th.nrows() as f64;
                let n_hg = linalg::trace_prod(&(&inputs.rbar[h] * th), &(&inputs.cross[h][g] * th)) / bh / den[h];
                inter += zeta2[h] * ps * streams[h] as f64 / bh * n_hg / (1.0 + mh).powi(2);
            }
        }
        upsilon.push(ugg);
        let q = 1.0 + m;
        gamma.push(ps * zeta2[g] * m * m / (zeta2[g] * ugg + (1.0 + inter) * q * q));
    }
    Ok(DetEqSolution {
        m: res.iter().map(|r| r.m[0]).collect(),
        iterations: res.iter().map(|r| r.iterations).max().unwrap_or(0),
        residual: res.iter().map(|r| r.residual).fold(0.0, f64::max),
        t: res.into_iter().map(|r| r.t).collect(),
        gamma_big,
        upsilon,
        e_o: vec![0.0; g_n],
        zeta2,
        gamma,
    })
}

/// B^H R_g B blocks and B^H B for the stacked pre-beamformer.
pub fn jgp_inputs(specs: &[CovarianceSpec], pb: &PreBeamformer) -> (Vec<CMat>, CMat) {
    let b = pb.stacked();
    let rt = specs.iter().map(|s| linalg::hermitize(&(b.adjoint() * &s.r * &b))).collect();
    (rt, b.adjoint() * &b)
}
