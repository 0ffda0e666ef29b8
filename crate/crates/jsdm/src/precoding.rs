//! Second-stage linear precoders (RZF / ZF) and exact SINR evaluation.

use crate::error::{JsdmError, Result};
use crate::linalg::{self, CMat, C64};
use crate::prebeam::PreBeamformer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rzf,
    Zf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Processing {
    /// One precoder over the stacked effective channel B^H H.
    Jgp,
    /// One precoder per group on B_g^H H_g.
    Pgp,
    /// No pre-beamforming (B = I_M).
    FullCsit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingConfig {
    pub scheme: Scheme,
    pub processing: Processing,
    /// Regularization. `None` selects S/(bP) with b the total pre-beamformed dimension.
    pub alpha: Option<f64>,
    /// Total transmit power; the noise variance is one.
    pub p: f64,
    /// Served streams per group.
    pub streams: Vec<usize>,
}

impl PrecodingConfig {
    pub fn new(scheme: Scheme, processing: Processing, p: f64, streams: Vec<usize>) -> Self {
        PrecodingConfig { scheme, processing, alpha: None, p, streams }
    }

    pub fn total_streams(&self) -> usize {
        self.streams.iter().sum()
    }

    /// alpha = S/(bP) unless overridden.
    pub fn alpha_for(&self, b_total: usize) -> f64 {
        self.alpha.unwrap_or_else(|| default_alpha(self.total_streams(), b_total, self.p))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 0.0) {
            return Err(JsdmError::invalid(format!("power must be finite and >= 0, got {}", self.p)));
        }
        if self.streams.is_empty() || self.streams.iter().any(|&s| s == 0) {
            return Err(JsdmError::invalid("every group needs at least one stream"));
        }
        if let Some(a) = self.alpha {
            if self.scheme == Scheme::Rzf && !(a > 0.0 && a.is_finite()) {
                return Err(JsdmError::invalid(format!("RZF needs alpha > 0, got {a}")));
            }
        }
        Ok(())
    }
}

pub fn default_alpha(s: usize, b: usize, p: f64) -> f64 {
    s as f64 / (b as f64 * p)
}

/// Unnormalized second-stage matrix and its power normalization, V = zeta · B · matrix.
#[derive(Debug, Clone)]
pub struct Precoder {
    pub matrix: CMat,
    pub zeta: f64,
}

/// K H with K = [H H^H + b·alpha·I]^{-1}; b is the row count of `heff`.
fn rzf_direction(heff: &CMat, alpha: f64) -> Result<CMat> {
    if heff.ncols() == 0 {
        return Err(JsdmError::invalid("effective channel has no columns"));
    }
    if !(alpha > 0.0) {
        return Err(JsdmError::invalid(format!("RZF needs alpha > 0, got {alpha}")));
    }
    let (b, s) = heff.shape();
    let reg = C64::new(b as f64 * alpha, 0.0);
    if s < b {
        // push-through form H (H^H H + b alpha I)^{-1}, stable as alpha -> 0
        let g = heff.adjoint() * heff + CMat::identity(s, s) * reg;
        Ok(heff * linalg::hpd_inverse(&g)?)
    } else {
        let k = heff * heff.adjoint() + CMat::identity(b, b) * reg;
        Ok(linalg::hpd_inverse(&k)? * heff)
    }
}

/// Condition-number ceiling for ZF.
pub const ZF_COND_MAX: f64 = 1e10;

/// H (H^H H)^{-1}.
fn zf_direction(heff: &CMat) -> Result<CMat> {
    if heff.ncols() == 0 {
        return Err(JsdmError::invalid("effective channel has no columns"));
    }
    if heff.ncols() > heff.nrows() {
        return Err(JsdmError::Singular(format!(
            "ZF needs S <= b, got S = {} and b = {}; reduce the stream count",
            heff.ncols(),
            heff.nrows()
        )));
    }
    let sv = heff.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 0.0) || smax / smin > ZF_COND_MAX {
        return Err(JsdmError::Singular(format!(
            "effective channel is rank deficient (condition {:.3e}); reduce the stream count",
            smax / smin
        )));
    }
    let gram = heff.adjoint() * heff;
    Ok(heff * linalg::hpd_inverse(&gram)?)
}

fn normalize(dir: CMat, b: Option<&CMat>) -> Result<Precoder> {
    let s = dir.ncols() as f64;
    let pw = match b {
        Some(b) => {
            let v = b * &dir;
            v.norm_squared()
        }
        None => dir.norm_squared(),
    };
    if !(pw > 0.0 && pw.is_finite()) {
        return Err(JsdmError::Singular("precoder has zero or non-finite power".into()));
    }
    Ok(Precoder { zeta: (s / pw).sqrt(), matrix: dir })
}

/// Joint RZF: P = zeta K H with K = [H H^H + b alpha I]^{-1}, zeta² = S / tr(P^H B^H B P).
/// `b` is the stacked pre-beamformer; `None` means B = I (full CSIT).
pub fn rzf_precoder_jgp(heff: &CMat, alpha: f64, b: Option<&CMat>) -> Result<Precoder> {
    normalize(rzf_direction(heff, alpha)?, b)
}

/// Per-group RZF, regularized with the group dimension b_g.
pub fn rzf_precoder_pgp(heff_g: &CMat, alpha: f64, b_g: &CMat) -> Result<Precoder> {
    normalize(rzf_direction(heff_g, alpha)?, Some(b_g))
}

pub fn zf_precoder(heff: &CMat, b: Option<&CMat>) -> Result<Precoder> {
    normalize(zf_direction(heff)?, b)
}

/// Effective channels in the layout each processing mode expects:
/// JGP -> B^H H_g (b × S_g), PGP -> B_g^H H_g (b_g × S_g), full CSIT -> H_g.
pub fn effective_channels(processing: Processing, pb: Option<&PreBeamformer>, channels: &[CMat]) -> Result<Vec<CMat>> {
    match processing {
        Processing::FullCsit => Ok(channels.to_vec()),
        Processing::Jgp => {
            let b = need_pb(pb)?.stacked();
            Ok(channels.iter().map(|h| b.adjoint() * h).collect())
        }
        Processing::Pgp => {
            let pb = need_pb(pb)?;
            if pb.groups() != channels.len() {
                return Err(JsdmError::invalid("group count differs between pre-beamformer and channels"));
            }
            Ok(pb.blocks.iter().zip(channels).map(|(b, h)| b.adjoint() * h).collect())
        }
    }
}

fn need_pb(pb: Option<&PreBeamformer>) -> Result<&PreBeamformer> {
    pb.ok_or_else(|| JsdmError::invalid("this processing mode needs a pre-beamformer"))
}

/// Builds the precoders from (possibly estimated) effective channels laid out
/// as by [`effective_channels`]. JGP and full CSIT return one precoder, PGP one per group.
pub fn design_precoders(cfg: &PrecodingConfig, pb: Option<&PreBeamformer>, heff: &[CMat]) -> Result<Vec<Precoder>> {
    cfg.validate()?;
    if heff.len() != cfg.streams.len() {
        return Err(JsdmError::invalid("one effective channel per group is required"));
    }
    for (g, (h, &s)) in heff.iter().zip(&cfg.streams).enumerate() {
        if h.ncols() != s {
            return Err(JsdmError::invalid(format!("group {g}: channel has {} columns, expected {s}", h.ncols())));
        }
    }
    match cfg.processing {
        Processing::Jgp | Processing::FullCsit => {
            let (b, b_total) = match cfg.processing {
                Processing::Jgp => {
                    let pb = need_pb(pb)?;
                    (Some(pb.stacked()), pb.total_dim())
                }
                _ => (None, heff[0].nrows()),
            };
            let h = linalg::hstack(heff);
            let p = match cfg.scheme {
                Scheme::Rzf => rzf_precoder_jgp(&h, cfg.alpha_for(b_total), b.as_ref())?,
                Scheme::Zf => zf_precoder(&h, b.as_ref())?,
            };
            Ok(vec![p])
        }
        Processing::Pgp => {
            let pb = need_pb(pb)?;
            let alpha = cfg.alpha_for(pb.total_dim());
            pb.blocks
                .iter()
                .zip(heff)
                .map(|(bg, h)| match cfg.scheme {
                    Scheme::Rzf => rzf_precoder_pgp(h, alpha, bg),
                    Scheme::Zf => zf_precoder(h, Some(bg)),
                })
                .collect()
        }
    }
}

/// Antenna-domain transmit matrix V (M × S), columns ordered by group.
pub fn transmit_matrix(processing: Processing, pb: Option<&PreBeamformer>, precoders: &[Precoder]) -> Result<CMat> {
    let scaled = |b: Option<&CMat>, p: &Precoder| -> CMat {
        let v = match b {
            Some(b) => b * &p.matrix,
            None => p.matrix.clone(),
        };
        v * C64::new(p.zeta, 0.0)
    };
    match processing {
        Processing::FullCsit => Ok(scaled(None, one(precoders)?)),
        Processing::Jgp => Ok(scaled(Some(&need_pb(pb)?.stacked()), one(precoders)?)),
        Processing::Pgp => {
            let pb = need_pb(pb)?;
            if precoders.len() != pb.groups() {
                return Err(JsdmError::invalid("PGP needs one precoder per group"));
            }
            let blocks: Vec<CMat> = pb.blocks.iter().zip(precoders).map(|(b, p)| scaled(Some(b), p)).collect();
            Ok(linalg::hstack(&blocks))
        }
    }
}

fn one(p: &[Precoder]) -> Result<&Precoder> {
    match p {
        [x] => Ok(x),
        _ => Err(JsdmError::invalid(format!("expected a single joint precoder, got {}", p.len()))),
    }
}

#[derive(Debug, Clone)]
pub struct SinrReport {
    pub sinr: Vec<f64>,
    pub rate: Vec<f64>,
    pub group_of: Vec<usize>,
    pub sum_se: f64,
    pub zeta: Vec<f64>,
}

impl SinrReport {
    pub fn group_sum(&self, g: usize) -> f64 {
        self.rate.iter().zip(&self.group_of).filter(|(_, &h)| h == g).map(|(r, _)| r).sum()
    }
}

/// Per-user SINR with equal per-stream power P/S and unit noise:
/// gamma_k = (P/S)|h_k^H v_k|² / (1 + (P/S) Σ_{j≠k} |h_k^H v_j|²).
pub fn sinr_from_transmit(h: &CMat, v: &CMat, p: f64) -> Result<Vec<f64>> {
    if h.ncols() != v.ncols() || h.nrows() != v.nrows() {
        return Err(JsdmError::invalid(format!(
            "channel {:?} and transmit matrix {:?} shapes differ",
            h.shape(),
            v.shape()
        )));
    }
    let s = v.ncols();
    let a = h.adjoint() * v;
    let ps = p / s as f64;
    Ok((0..s)
        .map(|k| {
            let sig = a[(k, k)].norm_sqr();
            let tot: f64 = a.row(k).iter().map(|x| x.norm_sqr()).sum();
            ps * sig / (1.0 + ps * (tot - sig).max(0.0))
        })
        .collect())
}

/// Exact SINR of the given precoders on the true channels (M × S_g per group).
pub fn exact_sinr(cfg: &PrecodingConfig, channels: &[CMat], pb: Option<&PreBeamformer>, precoders: &[Precoder]) -> Result<SinrReport> {
    let v = transmit_matrix(cfg.processing, pb, precoders)?;
    let h = linalg::hstack(channels);
    let sinr = sinr_from_transmit(&h, &v, cfg.p)?;
    let rate: Vec<f64> = sinr.iter().map(|g| (1.0 + g).log2()).collect();
    let group_of = channels.iter().enumerate().flat_map(|(g, c)| std::iter::repeat_n(g, c.ncols())).collect();
    Ok(SinrReport {
        sum_se: rate.iter().sum(),
        sinr,
        rate,
        group_of,
        zeta: precoders.iter().map(|p| p.zeta).collect(),
    })
}

/// Design on the true channels and evaluate.
pub fn evaluate(cfg: &PrecodingConfig, pb: Option<&PreBeamformer>, channels: &[CMat]) -> Result<SinrReport> {
    let heff = effective_channels(cfg.processing, pb, channels)?;
    let pre = design_precoders(cfg, pb, &heff)?;
    exact_sinr(cfg, channels, pb, &pre)
}

/// Transmit power tr(V (P/S) I V^H).
pub fn transmit_power(v: &CMat, p: f64) -> f64 {
    v.norm_squared() * p / v.ncols() as f64
}
