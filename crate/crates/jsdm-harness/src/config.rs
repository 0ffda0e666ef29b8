//! Scenario files (TOML). Angles are in degrees and powers in dB here;
//! everything is converted to radians and linear scale on the way in.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use jsdm::deteq::SolverConfig;
use jsdm::geometry::{self, ArrayGeometry, GroupProfile};
use jsdm::layout3d::LayoutParams;
use jsdm::precoding::{Processing, Scheme};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mc_draws: usize,
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<GroupsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prebeam: Option<PrebeamConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precoding: Option<PrecodingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout3d: Option<Layout3dSection>,
}

fn default_snr() -> Vec<f64> {
    vec![0.0, 10.0, 20.0, 30.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometryConfig {
    Ula { antennas: usize, spacing: f64 },
    Uca { antennas: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub count: usize,
    pub spread_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub theta_deg: f64,
    pub spread_deg: f64,
    #[serde(default = "one")]
    pub gain: f64,
}

fn one() -> f64 {
    1.0
}

/// Either `ring` (evenly spaced centers around the circle) or an explicit `list`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring: Option<RingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<GroupEntry>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrebeamKind {
    /// B_g = U_g (full eigenspace).
    Eigen,
    /// B_g = top-b eigenvectors of R_g.
    Dominant,
    ApproxBd,
    Dft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrebeamConfig {
    pub method: PrebeamKind,
    /// Common width b'; DFT blocks are capped to it when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_star: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Rzf,
    Zf,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Rzf => Scheme::Rzf,
            SchemeName::Zf => Scheme::Zf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessingName {
    Jgp,
    Pgp,
}

impl From<ProcessingName> for Processing {
    fn from(p: ProcessingName) -> Self {
        match p {
            ProcessingName::Jgp => Processing::Jgp,
            ProcessingName::Pgp => Processing::Pgp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecodingSection {
    pub scheme: SchemeName,
    pub processing: ProcessingName,
    /// Streams per group (S').
    pub streams: usize,
    /// Overrides α = S/(bP).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    /// Coherence block length T in symbols.
    pub coherence: usize,
    /// Training SNR; defaults to P/G at each grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_db: Option<f64>,
    /// Apply max{1 − b'/T, 0}.
    #[serde(default = "yes")]
    pub penalty: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub damping: f64,
}

fn default_tol() -> f64 {
    SolverConfig::default().tol
}

fn default_max_iter() -> usize {
    SolverConfig::default().max_iter
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { tol: default_tol(), max_iter: default_max_iter(), damping: 0.0 }
    }
}

impl SolverSection {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig { tol: self.tol, max_iter: self.max_iter, damping: self.damping }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Inclusive b' range.
    pub b_min: usize,
    pub b_max: usize,
    /// S' used by the b' sweep; the slope analysis scans 1..=b'.
    pub s_prime: usize,
    /// Schemes covered by the slope analysis.
    #[serde(default = "both_schemes")]
    pub schemes: Vec<SchemeName>,
}

fn both_schemes() -> Vec<SchemeName> {
    vec![SchemeName::Rzf, SchemeName::Zf]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Layout3dSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pathloss_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pathloss_d0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizontal_antennas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertical_antennas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector_half_width_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patterns: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(default = "both_schemes")]
    pub schemes: Vec<SchemeName>,
}

impl Layout3dSection {
    pub fn params(&self) -> LayoutParams {
        let mut p = LayoutParams::default();
        macro_rules! set {
            ($field:ident, $dst:expr) => {
                if let Some(v) = self.$field {
                    $dst = v;
                }
            };
        }
        set!(cell_radius, p.cell_radius);
        set!(region_step, p.region_step);
        set!(regions, p.regions);
        set!(bs_height, p.bs_height);
        set!(scatter_radius, p.scatter_radius);
        set!(pathloss_exponent, p.pathloss.delta);
        set!(pathloss_d0, p.pathloss.d0);
        set!(horizontal_antennas, p.m);
        set!(vertical_antennas, p.n);
        set!(spacing, p.spacing);
        if let Some(w) = self.sector_half_width_deg {
            p.sector_half_width = w.to_radians();
        }
        if let Some(g) = self.guard_deg {
            p.guard = g.to_radians();
        }
        p
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(vec![format!("{}: {e}", path.display())]))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn geometry(&self) -> Result<ArrayGeometry, HarnessError> {
        let g = self.geometry.as_ref().ok_or_else(|| HarnessError::config("missing [geometry] section"))?;
        Ok(match *g {
            GeometryConfig::Ula { antennas, spacing } => ArrayGeometry::ula(antennas, spacing)?,
            GeometryConfig::Uca { antennas } => ArrayGeometry::uca(antennas)?,
        })
    }

    pub fn antennas(&self) -> Option<usize> {
        self.geometry.as_ref().map(|g| match *g {
            GeometryConfig::Ula { antennas, .. } | GeometryConfig::Uca { antennas } => antennas,
        })
    }

    pub fn profiles(&self) -> Result<Vec<GroupProfile>, HarnessError> {
        let g = self.groups.as_ref().ok_or_else(|| HarnessError::config("missing [groups] section"))?;
        match (&g.ring, &g.list) {
            (Some(ring), None) => {
                let delta = ring.spread_deg.to_radians();
                geometry::ring_centers(ring.count, delta)
                    .into_iter()
                    .enumerate()
                    .map(|(i, t)| Ok(GroupProfile::with_gain(t, delta, 1.0, format!("g{i}"))?))
                    .collect()
            }
            (None, Some(list)) => list
                .iter()
                .enumerate()
                .map(|(i, e)| Ok(GroupProfile::with_gain(e.theta_deg.to_radians(), e.spread_deg.to_radians(), e.gain, format!("g{i}"))?))
                .collect(),
            _ => Err(HarnessError::config("[groups] needs exactly one of `ring` or `list`")),
        }
    }

    /// Collects every violated constraint instead of stopping at the first.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut errs = Vec::new();
        if self.id.trim().is_empty() {
            errs.push("id must not be empty".to_string());
        }
        if self.snr_db.is_empty() {
            errs.push("snr_db must list at least one value".to_string());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            errs.push("snr_db values must be finite".to_string());
        }
        let s = &self.solver;
        if !(s.tol > 0.0) || s.max_iter == 0 || !(0.0..1.0).contains(&s.damping) {
            errs.push("solver: tol > 0, max_iter >= 1 and damping in [0, 1) are required".to_string());
        }
        if let Some(l) = &self.layout3d {
            if let Err(e) = l.params().validate() {
                errs.push(format!("layout3d: {e}"));
            }
            if let Some(gr) = &l.alpha_grid {
                if gr.is_empty() || gr.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
                    errs.push("layout3d.alpha_grid values must lie in (0, 1]".to_string());
                }
            }
            if l.schemes.is_empty() {
                errs.push("layout3d.schemes must not be empty".to_string());
            }
        }
        let planar = self.geometry.is_some() || self.groups.is_some() || self.prebeam.is_some() || self.precoding.is_some();
        if planar {
            self.validate_planar(&mut errs);
        } else if self.layout3d.is_none() {
            errs.push("scenario needs either planar sections ([geometry], [groups], ...) or [layout3d]".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(errs))
        }
    }

    fn validate_planar(&self, errs: &mut Vec<String>) {
        match self.geometry() {
            Ok(_) => {}
            Err(e) => errs.push(format!("geometry: {e}")),
        }
        let profiles = match self.profiles() {
            Ok(p) if p.is_empty() => {
                errs.push("groups: at least one group is required".to_string());
                return;
            }
            Ok(p) => p,
            Err(e) => {
                errs.push(format!("groups: {e}"));
                return;
            }
        };
        let g = profiles.len();
        let m = self.antennas().unwrap_or(0);
        let Some(pb) = &self.prebeam else {
            return;
        };
        match pb.method {
            PrebeamKind::ApproxBd => {
                if pb.b.is_none() || pb.r_star.is_none() {
                    errs.push("prebeam: approx_bd needs both b and r_star".to_string());
                }
                if let (Some(b), Some(r)) = (pb.b, pb.r_star) {
                    if b + r * (g - 1) > m {
                        errs.push(format!("prebeam: b + r_star·(G−1) = {} exceeds M = {m}", b + r * (g - 1)));
                    }
                }
            }
            PrebeamKind::Dominant => {
                if pb.b.is_none() {
                    errs.push("prebeam: dominant needs b".to_string());
                }
            }
            PrebeamKind::Dft => {
                if !matches!(self.geometry, Some(GeometryConfig::Ula { .. })) {
                    errs.push("prebeam: dft pre-beamforming needs a ULA".to_string());
                }
            }
            PrebeamKind::Eigen => {}
        }
        if let (Some(b), Some(pc)) = (pb.b, &self.precoding) {
            if pc.streams == 0 {
                errs.push("precoding: streams must be >= 1".to_string());
            }
            if pc.streams > b {
                errs.push(format!("precoding: S' = {} exceeds b' = {b}", pc.streams));
            }
            if pc.scheme == SchemeName::Zf && pc.streams >= b && pc.processing == ProcessingName::Pgp && self.training.is_some() {
                errs.push("precoding: ZF with training needs S' < b'".to_string());
            }
        }
        if let Some(pc) = &self.precoding {
            if let Some(a) = pc.alpha {
                if !(a > 0.0 && a.is_finite()) {
                    errs.push("precoding: alpha must be > 0".to_string());
                }
            }
        }
        if let Some(t) = &self.training {
            if t.coherence == 0 {
                errs.push("training: coherence must be >= 1".to_string());
            }
            if matches!(&self.precoding, Some(pc) if pc.processing == ProcessingName::Jgp) {
                errs.push("training: noisy CSIT is only modelled for PGP".to_string());
            }
            if pb.b.is_none() {
                errs.push("training: a common width b is required".to_string());
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.b_min == 0 || sw.b_min > sw.b_max {
                errs.push("sweep: need 1 <= b_min <= b_max".to_string());
            }
            if sw.s_prime == 0 {
                errs.push("sweep: s_prime must be >= 1".to_string());
            }
            if self.training.is_none() {
                errs.push("sweep: a [training] section is required".to_string());
            }
            if pb.method != PrebeamKind::ApproxBd {
                errs.push("sweep: b' sweeps use approx_bd pre-beamforming".to_string());
            }
        }
    }
}
