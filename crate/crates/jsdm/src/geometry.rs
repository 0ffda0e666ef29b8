//! Antenna geometries, one-ring covariances, their eigenstructure and
//! random channel draws.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{JsdmError, Result};
use crate::linalg::{self, CMat, C64};
use crate::quad::{integrate_vec, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayKind {
    Ula,
    Uca,
    Ura,
}

/// Element positions in wavelengths.
///
/// ULA elements sit on the second axis at `(0, m·D)`, so the one-ring
/// integrand reduces to exp(−j2πD(m−p) sin α). URA elements are stored
/// row-major as index `h·N + v` with coordinates `(h·D, v·D)`, which matches
/// the ordering of `R_H ⊗ R_V`.
#[derive(Debug, Clone)]
pub struct ArrayGeometry {
    pub kind: ArrayKind,
    pub m: usize,
    pub n: usize,
    pub spacing: f64,
    pub positions: Vec<[f64; 2]>,
}

impl ArrayGeometry {
    pub fn ula(m: usize, spacing: f64) -> Result<Self> {
        if m == 0 {
            return Err(JsdmError::invalid("ULA needs at least one element"));
        }
        if !(spacing >= 0.0 && spacing.is_finite()) {
            return Err(JsdmError::invalid(format!("ULA spacing must be finite and >= 0, got {spacing}")));
        }
        let positions = (0..m).map(|i| [0.0, i as f64 * spacing]).collect();
        Ok(ArrayGeometry { kind: ArrayKind::Ula, m, n: 1, spacing, positions })
    }

    /// Circular array whose adjacent elements are half a wavelength apart.
    pub fn uca(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(JsdmError::invalid("UCA needs at least two elements"));
        }
        let radius = uca_radius(m);
        let positions = (0..m)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / m as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        Ok(ArrayGeometry { kind: ArrayKind::Uca, m, n: 1, spacing: 0.5, positions })
    }

    pub fn ura(m: usize, n: usize, spacing: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(JsdmError::invalid("URA dimensions must be positive"));
        }
        if !(spacing >= 0.0 && spacing.is_finite()) {
            return Err(JsdmError::invalid(format!("URA spacing must be finite and >= 0, got {spacing}")));
        }
        let mut positions = Vec::with_capacity(m * n);
        for h in 0..m {
            for v in 0..n {
                positions.push([h as f64 * spacing, v as f64 * spacing]);
            }
        }
        Ok(ArrayGeometry { kind: ArrayKind::Ura, m, n, spacing, positions })
    }

    /// Total element count.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Horizontal and vertical ULA factors of a URA.
    pub fn ura_factors(&self) -> Result<(ArrayGeometry, ArrayGeometry)> {
        if self.kind != ArrayKind::Ura {
            return Err(JsdmError::invalid("ura_factors called on a non-URA geometry"));
        }
        Ok((ArrayGeometry::ula(self.m, self.spacing)?, ArrayGeometry::ula(self.n, self.spacing)?))
    }
}

/// 0.5 / sqrt((1 − cos 2π/M)² + sin² 2π/M).
pub fn uca_radius(m: usize) -> f64 {
    let a = 2.0 * PI / m as f64;
    0.5 / ((1.0 - a.cos()).powi(2) + a.sin().powi(2)).sqrt()
}

/// Angle-of-arrival description of one user group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupProfile {
    pub theta: f64,
    pub delta: f64,
    pub gain: f64,
    pub label: String,
}

impl GroupProfile {
    pub fn new(theta: f64, delta: f64) -> Result<Self> {
        Self::with_gain(theta, delta, 1.0, String::new())
    }

    pub fn with_gain(theta: f64, delta: f64, gain: f64, label: impl Into<String>) -> Result<Self> {
        let p = GroupProfile { theta, delta, gain, label: label.into() };
        p.validate()?;
        Ok(p)
    }

    /// The AoA interval must sit inside [−π, π]; the closed endpoints admit
    /// the isotropic ring θ = 0, Δ = π.
    pub fn validate(&self) -> Result<()> {
        let eps = 1e-12;
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(JsdmError::invalid(format!("angular spread must be > 0, got {}", self.delta)));
        }
        if !self.theta.is_finite() || self.theta - self.delta < -PI - eps || self.theta + self.delta > PI + eps {
            return Err(JsdmError::invalid(format!(
                "AoA interval [{:.6}, {:.6}] leaves [-pi, pi]",
                self.theta - self.delta,
                self.theta + self.delta
            )));
        }
        if !(self.gain > 0.0) || !self.gain.is_finite() {
            return Err(JsdmError::invalid(format!("gain must be > 0, got {}", self.gain)));
        }
        Ok(())
    }

    pub fn lo(&self) -> f64 {
        self.theta - self.delta
    }

    pub fn hi(&self) -> f64 {
        self.theta + self.delta
    }
}

/// Rule selecting the effective rank r*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectiveRank {
    /// Smallest r* whose leading eigenvalues capture this fraction of tr(R).
    TraceFraction(f64),
    /// Explicit value, clamped to the numerical rank.
    Fixed(usize),
}

impl Default for EffectiveRank {
    fn default() -> Self {
        EffectiveRank::TraceFraction(1.0 - 1e-3)
    }
}

/// Relative eigenvalue threshold used for rank counting when none is given:
/// M·ε with ε the double-precision machine epsilon.
pub fn default_rank_tol(m: usize) -> f64 {
    m as f64 * f64::EPSILON
}

/// Knobs for covariance construction.
#[derive(Debug, Clone)]
pub struct CovarianceOptions {
    /// Relative rank threshold; `None` selects [`default_rank_tol`].
    pub rank_tol: Option<f64>,
    pub eff_rule: EffectiveRank,
    /// Absolute quadrature tolerance per matrix entry.
    pub quad_tol: f64,
    pub max_panels: usize,
}

impl Default for CovarianceOptions {
    fn default() -> Self {
        CovarianceOptions { rank_tol: None, eff_rule: EffectiveRank::default(), quad_tol: 1e-10, max_panels: 1 << 16 }
    }
}

/// Hermitian PSD covariance with its nonzero eigenpairs.
#[derive(Debug, Clone)]
pub struct CovarianceSpec {
    pub r: CMat,
    /// Eigenvectors of the `rank` eigenvalues above threshold (M × rank).
    pub u: CMat,
    /// Nonzero eigenvalues, descending.
    pub lambda: Vec<f64>,
    pub rank: usize,
    pub r_star: usize,
    /// tr(R)/M.
    pub gain: f64,
}

impl CovarianceSpec {
    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    /// First r* eigenvectors.
    pub fn u_star(&self) -> CMat {
        self.u.columns(0, self.r_star).into_owned()
    }

    /// Copy with an explicit effective rank.
    pub fn with_r_star(&self, r_star: usize) -> Result<Self> {
        if r_star == 0 || r_star > self.rank {
            return Err(JsdmError::invalid(format!("r_star {r_star} outside 1..={}", self.rank)));
        }
        let mut s = self.clone();
        s.r_star = r_star;
        Ok(s)
    }

    /// Fraction of tr(R) carried by the first r* eigenvalues.
    pub fn retained_trace(&self) -> f64 {
        let tr = linalg::re_trace(&self.r);
        self.lambda[..self.r_star].iter().sum::<f64>() / tr
    }

    /// Scaled copy c·R.
    pub fn scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.r.scale_mut(c);
        s.lambda.iter_mut().for_each(|l| *l *= c);
        s.gain *= c;
        s
    }
}

/// First-column correlations r_k = (1/2Δ)∫ exp(−j2πDk sin α) dα over the AoA
/// interval, k = 0..M−1.
pub fn ula_correlations(m: usize, spacing: f64, prof: &GroupProfile, tol: f64, max_panels: usize) -> Result<Vec<C64>> {
    prof.validate()?;
    let (lo, hi) = (prof.lo(), prof.hi());
    let width = hi - lo;
    let osc = spacing * (m.saturating_sub(1)) as f64 * width;
    let opts = QuadOptions {
        tol: tol * width,
        initial_panels: (osc / 4.0).ceil() as usize + 1,
        max_panels,
        ..QuadOptions::default()
    };
    let raw = integrate_vec(
        |a, buf| {
            let w = -2.0 * PI * spacing * a.sin();
            let step = C64::from_polar(1.0, w);
            let mut z = C64::new(1.0, 0.0);
            for (k, b) in buf.iter_mut().enumerate() {
                // Renormalizing avoids drift of the recursive phasor over long arrays.
                if k % 64 == 0 {
                    z = C64::from_polar(1.0, w * k as f64);
                }
                *b = z;
                z *= step;
            }
        },
        lo,
        hi,
        m,
        &opts,
    )?;
    let scale = prof.gain / width;
    let mut r: Vec<C64> = raw.into_iter().map(|z| z * scale).collect();
    r[0] = C64::new(prof.gain, 0.0);
    Ok(r)
}

/// Hermitian Toeplitz matrix with first column `r`.
pub fn toeplitz_hermitian(r: &[C64]) -> CMat {
    let m = r.len();
    CMat::from_fn(m, m, |i, j| if i >= j { r[i - j] } else { r[j - i].conj() })
}

/// Raw one-ring covariance matrix (no eigendecomposition).
pub fn one_ring_matrix(geom: &ArrayGeometry, prof: &GroupProfile, tol: f64, max_panels: usize) -> Result<CMat> {
    prof.validate()?;
    match geom.kind {
        ArrayKind::Ula => Ok(toeplitz_hermitian(&ula_correlations(geom.m, geom.spacing, prof, tol, max_panels)?)),
        ArrayKind::Uca => planar_one_ring(&geom.positions, prof, tol, max_panels),
        ArrayKind::Ura => Err(JsdmError::invalid(
            "URA covariances are built from horizontal and vertical factors; use kronecker_covariance",
        )),
    }
}

fn planar_one_ring(pos: &[[f64; 2]], prof: &GroupProfile, tol: f64, max_panels: usize) -> Result<CMat> {
    let m = pos.len();
    let (lo, hi) = (prof.lo(), prof.hi());
    let width = hi - lo;
    let mut extent = 0.0f64;
    for a in pos {
        for b in pos {
            extent = extent.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect();
    let opts = QuadOptions {
        tol: tol * width,
        initial_panels: (extent * width / 4.0).ceil() as usize + 1,
        max_panels,
        ..QuadOptions::default()
    };
    let mut phasor = vec![C64::new(0.0, 0.0); m];
    let phasor_cell = std::cell::RefCell::new(&mut phasor);
    let vals = integrate_vec(
        |a, buf| {
            let mut ph = phasor_cell.borrow_mut();
            let (kx, ky) = (-2.0 * PI * a.cos(), -2.0 * PI * a.sin());
            for (i, p) in pos.iter().enumerate() {
                ph[i] = C64::from_polar(1.0, kx * p[0] + ky * p[1]);
            }
            for (t, &(i, j)) in pairs.iter().enumerate() {
                buf[t] = ph[i] * ph[j].conj();
            }
        },
        lo,
        hi,
        pairs.len(),
        &opts,
    )?;
    let scale = prof.gain / width;
    let mut r = CMat::from_element(m, m, C64::new(prof.gain, 0.0));
    for (t, &(i, j)) in pairs.iter().enumerate() {
        let z = vals[t] * scale;
        r[(i, j)] = z;
        r[(j, i)] = z.conj();
    }
    Ok(r)
}

/// One-ring covariance with default options.
pub fn one_ring_covariance(geom: &ArrayGeometry, prof: &GroupProfile) -> Result<CovarianceSpec> {
    one_ring_covariance_with(geom, prof, &CovarianceOptions::default())
}

pub fn one_ring_covariance_with(geom: &ArrayGeometry, prof: &GroupProfile, opts: &CovarianceOptions) -> Result<CovarianceSpec> {
    let r = one_ring_matrix(geom, prof, opts.quad_tol, opts.max_panels)?;
    eigendecompose(&r, opts.rank_tol, opts.eff_rule)
}

/// Eigenstructure of a Hermitian PSD matrix. Eigenvalues at or below
/// `rank_tol`·λ_max count as zero.
pub fn eigendecompose(r: &CMat, rank_tol: Option<f64>, eff_rule: EffectiveRank) -> Result<CovarianceSpec> {
    linalg::check_hermitian(r, 1e-8)?;
    let m = r.nrows();
    if m == 0 {
        return Err(JsdmError::invalid("empty covariance"));
    }
    let rh = linalg::hermitize(r);
    let eig = linalg::herm_eig(&rh);
    let lmax = eig.values[0];
    if !(lmax > 0.0) {
        return Err(JsdmError::invalid("covariance has no positive eigenvalue"));
    }
    let lmin = *eig.values.last().unwrap();
    if lmin < -1e-8 * lmax {
        return Err(JsdmError::invalid(format!("covariance is not PSD: min eigenvalue {lmin:.3e}")));
    }
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(m));
    let rank = eig.values.iter().filter(|&&l| l > tol * lmax).count().max(1);
    let lambda: Vec<f64> = eig.values[..rank].to_vec();
    let u = eig.vectors.columns(0, rank).into_owned();
    let trace = linalg::re_trace(&rh);
    let r_star = match eff_rule {
        EffectiveRank::Fixed(k) => k.clamp(1, rank),
        EffectiveRank::TraceFraction(f) => {
            let mut acc = 0.0;
            let mut k = rank;
            for (i, l) in lambda.iter().enumerate() {
                acc += l;
                if acc >= f * trace {
                    k = i + 1;
                    break;
                }
            }
            k
        }
    };
    Ok(CovarianceSpec { r: rh, u, lambda, rank, r_star, gain: trace / m as f64 })
}

/// Channel realizations of one or more groups, one column per user.
#[derive(Debug, Clone)]
pub struct ChannelBatch {
    pub h: CMat,
    pub seed: u64,
    pub group_index: Vec<usize>,
}

/// K draws h = U Λ^{1/2} w with w ~ CN(0, I).
pub fn sample_channels(spec: &CovarianceSpec, k: usize, seed: u64) -> ChannelBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ChannelBatch { h: sample_channels_rng(spec, k, &mut rng), seed, group_index: vec![0; k] }
}

/// Same as [`sample_channels`] with a caller-supplied generator.
pub fn sample_channels_rng<R: rand::Rng + ?Sized>(spec: &CovarianceSpec, k: usize, rng: &mut R) -> CMat {
    let w = linalg::complex_gaussian(rng, spec.rank, k);
    let mut ul = spec.u.clone();
    for (i, mut col) in ul.column_iter_mut().enumerate() {
        col.scale_mut(spec.lambda[i].max(0.0).sqrt());
    }
    ul * w
}

/// Default cap on the Kronecker dimension M·N.
pub const KRONECKER_CAP: usize = 1 << 13;

/// R_H ⊗ R_V with eigenpairs assembled from the factors.
pub fn kronecker_covariance(rh: &CovarianceSpec, rv: &CovarianceSpec) -> Result<CovarianceSpec> {
    kronecker_covariance_capped(rh, rv, KRONECKER_CAP)
}

pub fn kronecker_covariance_capped(rh: &CovarianceSpec, rv: &CovarianceSpec, cap: usize) -> Result<CovarianceSpec> {
    let dim = rh.dim() * rv.dim();
    if dim > cap {
        return Err(JsdmError::DimensionOverflow { requested: dim, cap });
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(rh.rank * rv.rank);
    for i in 0..rh.rank {
        for j in 0..rv.rank {
            pairs.push((rh.lambda[i] * rv.lambda[j], i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut u = CMat::zeros(dim, pairs.len());
    for (k, &(_, i, j)) in pairs.iter().enumerate() {
        let v = rh.u.column(i).kronecker(&rv.u.column(j));
        u.set_column(k, &v);
    }
    let lambda: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let r = linalg::kron(&rh.r, &rv.r);
    let gain = linalg::re_trace(&r) / dim as f64;
    Ok(CovarianceSpec { r, u, lambda, rank: pairs.len(), r_star: (rh.r_star * rv.r_star).max(1), gain })
}

/// Ring centers −π + Δ + g·2π/G of G equally spaced groups.
pub fn ring_centers(groups: usize, delta: f64) -> Vec<f64> {
    (0..groups).map(|g| -PI + delta + g as f64 * 2.0 * PI / groups as f64).collect()
}
