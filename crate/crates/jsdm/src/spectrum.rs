//! Spectral analysis of ULA one-ring covariances: the Toeplitz symbol S(ξ),
//! its support, circulant eigenvalues, eigenvalue distributions and DFT
//! column selection.

use std::f64::consts::{FRAC_PI_2, PI};

use rustfft::FftPlanner;

use crate::error::{JsdmError, Result};
use crate::geometry::{self, GroupProfile};
use crate::linalg::{self, CMat, C64};

/// Position of the AoA interval relative to the turning points ±π/2 of sin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoaCase {
    /// The interval lies on one monotone branch of sin.
    Monotone = 1,
    /// The interval contains both −π/2 and π/2.
    BothTurns = 2,
    /// The interval contains −π/2 only.
    LowerTurn = 3,
    /// The interval contains π/2 only.
    UpperTurn = 4,
}

/// A range of D·sin α swept by one monotone piece of the AoA interval.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    zlo: f64,
    zhi: f64,
    /// Excludes z = zlo; used when a full-circle interval revisits its start.
    open_lo: bool,
}

/// Toeplitz symbol of a ULA one-ring covariance.
#[derive(Debug, Clone)]
pub struct SpectralDensity {
    pub d: f64,
    pub theta: f64,
    pub delta: f64,
    pub case_id: AoaCase,
    /// Disjoint closed intervals inside [−1/2, 1/2], ascending.
    pub support: Vec<(f64, f64)>,
    pieces: Vec<Piece>,
}

/// Value of S(ξ); `singular` marks an evaluation exactly on D² = (m − ξ)².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityValue {
    pub value: f64,
    pub singular: bool,
}

impl SpectralDensity {
    pub fn new(d: f64, theta: f64, delta: f64) -> Result<Self> {
        if !(d > 0.0 && d <= 1.0) {
            return Err(JsdmError::invalid(format!("spacing D must lie in (0, 1], got {d}")));
        }
        if !(delta > 0.0) {
            return Err(JsdmError::invalid(format!("angular spread must be > 0, got {delta}")));
        }
        let (lo, hi) = (theta - delta, theta + delta);
        let eps = 1e-12;
        // sin(±π) evaluates to ±1.2e-16 rather than 0.
        let snap = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
        if lo < -PI - eps || hi > PI + eps {
            return Err(JsdmError::invalid("AoA interval leaves [-pi, pi]"));
        }
        let z = |a: f64| d * snap(a.sin());
        let (case_id, pieces) = if lo < -FRAC_PI_2 && hi > FRAC_PI_2 {
            (
                AoaCase::BothTurns,
                vec![
                    Piece { zlo: -d, zhi: z(lo), open_lo: false },
                    Piece { zlo: -d, zhi: d, open_lo: false },
                    Piece { zlo: z(hi), zhi: d, open_lo: hi - lo >= 2.0 * PI - 1e-12 },
                ],
            )
        } else if lo < -FRAC_PI_2 && hi >= -FRAC_PI_2 {
            (AoaCase::LowerTurn, vec![Piece { zlo: -d, zhi: z(lo), open_lo: false }, Piece { zlo: -d, zhi: z(hi), open_lo: false }])
        } else if hi > FRAC_PI_2 && lo <= FRAC_PI_2 {
            (AoaCase::UpperTurn, vec![Piece { zlo: z(lo), zhi: d, open_lo: false }, Piece { zlo: z(hi), zhi: d, open_lo: false }])
        } else {
            let (a, b) = (z(lo), z(hi));
            (AoaCase::Monotone, vec![Piece { zlo: a.min(b), zhi: a.max(b), open_lo: false }])
        };
        let support = support_of(&pieces);
        Ok(SpectralDensity { d, theta, delta, case_id, support, pieces })
    }

    pub fn from_profile(d: f64, prof: &GroupProfile) -> Result<Self> {
        Self::new(d, prof.theta, prof.delta)
    }

    /// Lebesgue measure of the support.
    pub fn support_measure(&self) -> f64 {
        self.support.iter().map(|(a, b)| b - a).sum()
    }

    /// True if ξ lies in the (closed) support.
    pub fn in_support(&self, xi: f64) -> bool {
        self.support.iter().any(|&(a, b)| xi >= a - 1e-12 && xi <= b + 1e-12)
    }

    /// S(ξ) for ξ in [−1/2, 1/2].
    pub fn eval(&self, xi: f64) -> DensityValue {
        let d2 = self.d * self.d;
        let pre = 1.0 / (2.0 * self.delta);
        let mut sum = 0.0;
        for p in &self.pieces {
            let m0 = (xi + p.zlo).ceil() as i64;
            let m1 = (xi + p.zhi).floor() as i64;
            for m in m0..=m1 {
                let u = m as f64 - xi;
                if p.open_lo && u <= p.zlo {
                    continue;
                }
                let rad = d2 - u * u;
                if rad <= 1e-14 * d2 {
                    return DensityValue { value: f64::INFINITY, singular: true };
                }
                sum += pre / rad.sqrt();
            }
        }
        DensityValue { value: sum, singular: false }
    }
}

fn support_of(pieces: &[Piece]) -> Vec<(f64, f64)> {
    let mut iv: Vec<(f64, f64)> = Vec::new();
    for p in pieces {
        let m0 = (-0.5 + p.zlo).floor() as i64;
        let m1 = (0.5 + p.zhi).ceil() as i64;
        for m in m0..=m1 {
            let a = (m as f64 - p.zhi).max(-0.5);
            let b = (m as f64 - p.zlo).min(0.5);
            if b > a {
                iv.push((a, b));
            }
        }
    }
    iv.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Free-function form of [`SpectralDensity::eval`].
pub fn spectral_density_eval(sd: &SpectralDensity, xi: f64) -> DensityValue {
    sd.eval(xi)
}

/// |D sin(θ−Δ) − D sin(θ+Δ)|.
pub fn rank_bandwidth(d: f64, theta: f64, delta: f64) -> f64 {
    (d * (theta - delta).sin() - d * (theta + delta).sin()).abs()
}

/// Normalized asymptotic rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticRank {
    pub rho: f64,
    /// False when the AoA interval leaves (−π/2, π/2) and ρ came from the
    /// general support measure.
    pub closed_form: bool,
}

pub fn asymptotic_rank(d: f64, theta: f64, delta: f64) -> Result<AsymptoticRank> {
    if delta == 0.0 {
        return Ok(AsymptoticRank { rho: 0.0, closed_form: true });
    }
    let (lo, hi) = (theta - delta, theta + delta);
    if lo > -FRAC_PI_2 && hi < FRAC_PI_2 {
        return Ok(AsymptoticRank { rho: rank_bandwidth(d, theta, delta).min(1.0), closed_form: true });
    }
    let sd = SpectralDensity::new(d, theta, delta)?;
    Ok(AsymptoticRank { rho: sd.support_measure(), closed_form: false })
}

/// Eigenvalues of the circulant approximation with first column
/// c_0 = r_0, c_m = r_m + conj(r_{M−m}).
pub fn circulant_eigenvalues(r: &[C64]) -> Result<Vec<f64>> {
    let m = r.len();
    if m == 0 {
        return Ok(vec![]);
    }
    if r[0].im.abs() > 1e-12 * r[0].norm().max(1.0) {
        return Err(JsdmError::invalid("r_0 must be real"));
    }
    let mut c: Vec<C64> = (0..m)
        .map(|k| if k == 0 { C64::new(r[0].re, 0.0) } else { r[k] + r[m - k].conj() })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut c);
    let max = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let resid = c.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if resid > 1e-9 * max.max(f64::MIN_POSITIVE) {
        return Err(JsdmError::invalid(format!("circulant spectrum has imaginary residue {resid:.3e}")));
    }
    Ok(c.iter().map(|z| z.re).collect())
}

/// Where the eigenvalue list of [`eigenvalue_cdf`] comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfSource {
    Exact,
    Circulant,
    SampledS,
}

/// A ULA with a single one-ring group.
#[derive(Debug, Clone)]
pub struct UlaConfig {
    pub m: usize,
    pub d: f64,
    pub theta: f64,
    pub delta: f64,
    pub quad_tol: f64,
}

impl UlaConfig {
    pub fn new(m: usize, d: f64, theta: f64, delta: f64) -> Self {
        UlaConfig { m, d, theta, delta, quad_tol: 1e-10 }
    }

    pub fn correlations(&self) -> Result<Vec<C64>> {
        let prof = GroupProfile::new(self.theta, self.delta)?;
        geometry::ula_correlations(self.m, self.d, &prof, self.quad_tol, 1 << 16)
    }
}

/// Sorted (ascending) eigenvalue list whose empirical CDF is
/// F(λ) = (1/M)·#{λ_m ≤ λ}. `SampledS` evaluates S at the cell midpoints
/// (m + 1/2)/M, which never hit the integrable singularities.
pub fn eigenvalue_cdf(source: CdfSource, cfg: &UlaConfig) -> Result<Vec<f64>> {
    let mut v = match source {
        CdfSource::Exact => {
            let r = geometry::toeplitz_hermitian(&cfg.correlations()?);
            linalg::herm_eigvals(&r)
        }
        CdfSource::Circulant => circulant_eigenvalues(&cfg.correlations()?)?,
        CdfSource::SampledS => {
            let sd = SpectralDensity::new(cfg.d, cfg.theta, cfg.delta)?;
            (0..cfg.m)
                .map(|k| {
                    let v = sd.eval(wrap_frequency((k as f64 + 0.5) / cfg.m as f64));
                    if v.singular { 0.0 } else { v.value }
                })
                .collect()
        }
    };
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

/// Two-sample Kolmogorov-Smirnov distance of sorted samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    ks_distance_from(a, b, f64::NEG_INFINITY)
}

/// KS distance restricted to λ ≥ `floor`, i.e. sup over that range of |F_a − F_b|.
pub fn ks_distance_from(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0.0f64;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        if x >= floor {
            best = best.max((i as f64 / na - j as f64 / nb).abs());
        }
    }
    if floor.is_finite() {
        // Value of the CDFs just at the floor itself.
        let fa = a.iter().filter(|&&x| x <= floor).count() as f64 / na;
        let fb = b.iter().filter(|&&x| x <= floor).count() as f64 / nb;
        best = best.max((fa - fb).abs());
    }
    best
}

/// Fraction of values strictly above `rel`·max.
pub fn fraction_above(values: &[f64], rel: f64) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().filter(|&&x| x > rel * max).count() as f64 / values.len() as f64
}

/// Pairwise disjointness of closed AoA intervals. Tangent intervals (gap
/// below 1e-12 rad) count as overlapping; the diagonal is always false.
pub fn aoa_disjoint(profiles: &[GroupProfile]) -> Vec<Vec<bool>> {
    let g = profiles.len();
    let mut out = vec![vec![false; g]; g];
    for i in 0..g {
        for j in 0..g {
            if i != j {
                let (a, b) = (&profiles[i], &profiles[j]);
                out[i][j] = a.hi() < b.lo() - 1e-12 || b.hi() < a.lo() - 1e-12;
            }
        }
    }
    out
}

/// m/M folded into [−1/2, 1/2).
pub fn wrap_frequency(f: f64) -> f64 {
    let x = f - f.floor();
    if x >= 0.5 { x - 1.0 } else { x }
}

/// DFT columns whose wrapped frequency lies in a support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DftIndexSet {
    pub m: usize,
    pub indices: Vec<usize>,
}

pub fn dft_index_set(sd: &SpectralDensity, m: usize) -> Result<DftIndexSet> {
    let indices: Vec<usize> = (0..m).filter(|&k| sd.in_support(wrap_frequency(k as f64 / m as f64))).collect();
    if indices.is_empty() {
        return Err(JsdmError::infeasible(format!(
            "no DFT frequency of size {m} falls in the support (measure {:.3e}); increase M",
            sd.support_measure()
        )));
    }
    Ok(DftIndexSet { m, indices })
}

/// (1/M)·‖U U^H − F F^H‖_F² for two orthonormal bases.
pub fn subspace_distance(u: &CMat, f: &CMat) -> f64 {
    let m = u.nrows() as f64;
    ((u * u.adjoint()) - (f * f.adjoint())).norm_squared() / m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap_frequency(0.5), -0.5);
        assert_eq!(wrap_frequency(0.25), 0.25);
        assert!((wrap_frequency(0.75) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = vec![0.0, 1.0, 2.0];
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert!((ks_distance(&[0.0, 0.0], &[1.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn case_classification() {
        let c = |t: f64, d: f64| SpectralDensity::new(0.5, t, d).unwrap().case_id;
        assert_eq!(c(0.0, 0.3), AoaCase::Monotone);
        assert_eq!(c(2.5, 0.3), AoaCase::Monotone);
        assert_eq!(c(0.0, 2.0), AoaCase::BothTurns);
        assert_eq!(c(-1.5, 0.3), AoaCase::LowerTurn);
        assert_eq!(c(1.5, 0.3), AoaCase::UpperTurn);
    }
}
