//! Planar JSDM pipelines: covariances → pre-beamforming → det-eq / Monte Carlo.

use rayon::prelude::*;

use jsdm::deteq::{self, DetEqSolution, PgpInputs, SolverConfig};
use jsdm::geometry::{self, ArrayGeometry, CovarianceSpec, GroupProfile};
use jsdm::linalg::CMat;
use jsdm::prebeam::{self, PreBeamformer};
use jsdm::precoding::{self, PrecodingConfig, Processing, Scheme};
use jsdm::training::{self, GroupEstimator, TrainingConfig};

use crate::config::{db_to_linear, GeometryConfig, PrebeamKind, Scenario};
use crate::error::{HarnessError, Result};
use crate::rng::stream_rng;

/// Everything a planar scenario needs before the SNR loop.
#[derive(Debug, Clone)]
pub struct Planar {
    pub geom: ArrayGeometry,
    pub profiles: Vec<GroupProfile>,
    pub specs: Vec<CovarianceSpec>,
    pub pb: Option<PreBeamformer>,
    pub method: PrebeamKind,
}

impl Planar {
    pub fn groups(&self) -> usize {
        self.specs.len()
    }

    pub fn prebeam(&self) -> Result<&PreBeamformer> {
        self.pb.as_ref().ok_or_else(|| HarnessError::config("missing [prebeam] section"))
    }
}

pub fn covariances(sc: &Scenario) -> Result<(ArrayGeometry, Vec<GroupProfile>, Vec<CovarianceSpec>)> {
    let geom = sc.geometry()?;
    let profiles = sc.profiles()?;
    let mut specs: Vec<CovarianceSpec> = profiles
        .iter()
        .map(|p| geometry::one_ring_covariance(&geom, p))
        .collect::<jsdm::error::Result<_>>()?;
    if let Some(r) = sc.prebeam.as_ref().and_then(|p| p.r_star) {
        specs = specs.iter().map(|s| s.with_r_star(r)).collect::<jsdm::error::Result<_>>()?;
    }
    Ok((geom, profiles, specs))
}

pub fn build_prebeam(sc: &Scenario, profiles: &[GroupProfile], specs: &[CovarianceSpec], b_override: Option<usize>) -> Result<PreBeamformer> {
    let cfg = sc.prebeam.as_ref().ok_or_else(|| HarnessError::config("missing [prebeam] section"))?;
    let g = specs.len();
    let b = b_override.or(cfg.b);
    let need_b = || b.ok_or_else(|| HarnessError::config("prebeam: b is required for this method"));
    Ok(match cfg.method {
        PrebeamKind::Eigen => prebeam::eigen_beamforming(specs)?,
        PrebeamKind::Dominant => prebeam::dominant_eigen_beamforming(specs, &vec![need_b()?; g])?,
        PrebeamKind::ApproxBd => {
            let r = cfg.r_star.ok_or_else(|| HarnessError::config("prebeam: approx_bd needs r_star"))?;
            prebeam::approximate_bd(specs, &vec![r; g], &vec![need_b()?; g])?
        }
        PrebeamKind::Dft => {
            let (m, d) = match sc.geometry {
                Some(GeometryConfig::Ula { antennas, spacing }) => (antennas, spacing),
                _ => return Err(HarnessError::config("prebeam: dft needs a ULA")),
            };
            let cap = b.map(|b| vec![b; g]);
            prebeam::dft_prebeamforming(profiles, d, m, cap.as_deref())?
        }
    })
}

pub fn build(sc: &Scenario) -> Result<Planar> {
    sc.validate()?;
    let (geom, profiles, specs) = covariances(sc)?;
    let pb = match &sc.prebeam {
        Some(p) => Some(build_prebeam(sc, &profiles, &specs, None).map_err(|e| annotate(e, p.method))?),
        None => None,
    };
    let method = sc.prebeam.as_ref().map(|p| p.method).unwrap_or(PrebeamKind::Eigen);
    Ok(Planar { geom, profiles, specs, pb, method })
}

fn annotate(e: HarnessError, m: PrebeamKind) -> HarnessError {
    match e {
        HarnessError::Solver(jsdm::error::JsdmError::Infeasible(msg)) => HarnessError::Config(vec![format!("prebeam {m:?}: {msg}")]),
        other => other,
    }
}

/// Resolved per-SNR parameters of the precoding stage.
#[derive(Debug, Clone)]
pub struct Operating {
    pub scheme: Scheme,
    pub processing: Processing,
    pub streams: Vec<usize>,
    pub p: f64,
    pub alpha: f64,
    pub training: Option<TrainingConfig>,
}

pub fn operating(sc: &Scenario, planar: &Planar, snr_db: f64) -> Result<Operating> {
    let pc = sc.precoding.as_ref().ok_or_else(|| HarnessError::config("missing [precoding] section"))?;
    let pb = planar.prebeam()?;
    let g = planar.groups();
    let p = db_to_linear(snr_db);
    let streams = vec![pc.streams; g];
    let s_tot = pc.streams * g;
    let alpha = pc.alpha.unwrap_or_else(|| precoding::default_alpha(s_tot, pb.total_dim(), p));
    let training = match &sc.training {
        Some(t) => {
            let mut tc = TrainingConfig::new(pb.b[0], t.coherence, p, g, sc.seed)?;
            if let Some(r) = t.rho_db {
                tc.rho_tr = db_to_linear(r);
            }
            if !t.penalty {
                tc.t_coherence = usize::MAX;
            }
            Some(tc)
        }
        None => None,
    };
    Ok(Operating { scheme: pc.scheme.into(), processing: pc.processing.into(), streams, p, alpha, training })
}

pub fn method_label(sc: &Scenario) -> String {
    let mut parts = Vec::new();
    if let Some(pc) = &sc.precoding {
        parts.push(format!("{:?}", pc.processing).to_lowercase());
        parts.push(format!("{:?}", pc.scheme).to_lowercase());
    }
    if let Some(pb) = &sc.prebeam {
        let mut s = format!("{:?}", pb.method).to_lowercase();
        if let Some(r) = pb.r_star {
            s.push_str(&format!("-r{r}"));
        }
        if let Some(b) = pb.b {
            s.push_str(&format!("-b{b}"));
        }
        parts.push(s);
    }
    if sc.training.is_some() {
        parts.push("csit".into());
    }
    parts.join("/")
}

#[derive(Debug, Clone)]
pub struct DetEqPoint {
    pub snr_db: f64,
    pub solution: DetEqSolution,
    pub streams: Vec<usize>,
    /// Σ S_g log2(1+γ_g), times the training penalty when present.
    pub sum_se: f64,
}

/// PGP inputs with R̂ from the MMSE estimator when training is configured.
pub fn pgp_inputs(planar: &Planar, op: &Operating) -> Result<PgpInputs> {
    let pb = planar.prebeam()?;
    let inputs = PgpInputs::from_prebeam(&planar.specs, pb)?;
    Ok(match &op.training {
        Some(tc) => {
            let est = training::estimators(&planar.specs, pb, tc)?;
            inputs.with_estimates(est.into_iter().map(|e| e.rhat).collect())?
        }
        None => inputs,
    })
}

pub fn deteq_solve(planar: &Planar, op: &Operating, cfg: &SolverConfig) -> Result<DetEqSolution> {
    let pb = planar.prebeam()?;
    Ok(match (op.processing, op.scheme) {
        (Processing::Jgp, Scheme::Rzf) => {
            let (rt, bb) = deteq::jgp_inputs(&planar.specs, pb);
            deteq::deteq_jgp_rzf(&rt, &bb, &op.streams, op.p, op.alpha, cfg)?
        }
        (Processing::Pgp, Scheme::Rzf) => {
            let inp = pgp_inputs(planar, op)?;
            if op.training.is_some() {
                deteq::deteq_pgp_rzf_csit(&inp, &op.streams, op.p, op.alpha, cfg)?
            } else {
                deteq::deteq_pgp_rzf(&inp, &op.streams, op.p, op.alpha, cfg)?
            }
        }
        (Processing::Pgp, Scheme::Zf) => deteq::deteq_pgp_zf_csit(&pgp_inputs(planar, op)?, &op.streams, op.p, cfg)?,
        (p, s) => return Err(HarnessError::config(format!("no deterministic equivalent for {p:?}-{s:?}"))),
    })
}

pub fn deteq_point(sc: &Scenario, planar: &Planar, snr_db: f64) -> Result<DetEqPoint> {
    let op = operating(sc, planar, snr_db)?;
    let solution = deteq_solve(planar, &op, &sc.solver.to_config())?;
    let penalty = op.training.as_ref().map_or(1.0, |t| t.penalty());
    let sum_se = penalty * solution.sum_se(&op.streams);
    Ok(DetEqPoint { snr_db, solution, streams: op.streams, sum_se })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McPoint {
    pub snr_db: f64,
    pub draws: usize,
    /// Mean Σ_k log2(1+SINR_k), training penalty applied.
    pub sum_se: f64,
    /// Per group: mean of 10·log10(SINR) over users and draws.
    pub gamma_db: Vec<f64>,
    /// Per group: mean Σ_k log2(1+SINR_k).
    pub group_se: Vec<f64>,
}

struct Draw {
    group_db: Vec<f64>,
    group_se: Vec<f64>,
}

fn one_draw(planar: &Planar, op: &Operating, est: Option<&[GroupEstimator]>, seed: u64, d: u64) -> Result<Draw> {
    let pb = planar.prebeam()?;
    let mut user = 0u64;
    let h: Vec<CMat> = planar
        .specs
        .iter()
        .zip(&op.streams)
        .map(|(s, &k)| {
            let cols: Vec<CMat> = (0..k)
                .map(|_| {
                    let mut rng = stream_rng(seed, d, user);
                    user += 1;
                    geometry::sample_channels_rng(s, 1, &mut rng)
                })
                .collect();
            jsdm::linalg::hstack(&cols)
        })
        .collect();
    let mut cfg = PrecodingConfig::new(op.scheme, op.processing, op.p, op.streams.clone());
    cfg.alpha = Some(op.alpha);
    let heff = match (&op.training, est) {
        (Some(tc), Some(est)) => {
            let mut rng = stream_rng(seed, d, user);
            let obs = training::simulate_training_rng(&h, pb, tc, &mut rng)?;
            training::apply_estimators(&obs, est)?.hhat
        }
        _ => precoding::effective_channels(op.processing, Some(pb), &h)?,
    };
    let pre = precoding::design_precoders(&cfg, Some(pb), &heff)?;
    let rep = precoding::exact_sinr(&cfg, &h, Some(pb), &pre)?;
    let g_n = planar.groups();
    let mut group_db = vec![0.0; g_n];
    let mut group_se = vec![0.0; g_n];
    for (k, &g) in rep.group_of.iter().enumerate() {
        group_db[g] += 10.0 * rep.sinr[k].log10() / op.streams[g] as f64;
        group_se[g] += rep.rate[k];
    }
    Ok(Draw { group_db, group_se })
}

/// Monte Carlo over `draws` channel realizations. Draws run in parallel and
/// are reduced in draw order, so the result is independent of `threads`.
pub fn mc_point(sc: &Scenario, planar: &Planar, snr_db: f64, draws: usize, threads: usize) -> Result<McPoint> {
    if draws == 0 {
        return Err(HarnessError::config("Monte Carlo needs mc_draws >= 1"));
    }
    let op = operating(sc, planar, snr_db)?;
    let est = match &op.training {
        Some(tc) => Some(training::estimators(&planar.specs, planar.prebeam()?, tc)?),
        None => None,
    };
    let run = || -> Vec<Result<Draw>> {
        (0..draws as u64)
            .into_par_iter()
            .map(|d| one_draw(planar, &op, est.as_deref(), sc.seed, d))
            .collect()
    };
    let results = if threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| HarnessError::Io(e.to_string()))?
            .install(run)
    };
    let g_n = planar.groups();
    let mut gamma_db = vec![0.0; g_n];
    let mut group_se = vec![0.0; g_n];
    for r in results {
        let d = r?;
        for g in 0..g_n {
            gamma_db[g] += d.group_db[g];
            group_se[g] += d.group_se[g];
        }
    }
    let n = draws as f64;
    let penalty = op.training.as_ref().map_or(1.0, |t| t.penalty());
    gamma_db.iter_mut().for_each(|x| *x /= n);
    group_se.iter_mut().for_each(|x| *x *= penalty / n);
    Ok(McPoint { snr_db, draws, sum_se: group_se.iter().sum(), gamma_db, group_se })
}
