//! Noisy-CSIT sweeps over the training dimension b' and the stream count S'.

use rayon::prelude::*;

use jsdm::deteq::{self, PgpInputs, SolverConfig};
use jsdm::error::JsdmError;
use jsdm::geometry::CovarianceSpec;
use jsdm::prebeam;
use jsdm::precoding::{self, Scheme};
use jsdm::training::{self, TrainingConfig};

use crate::config::{db_to_linear, Scenario};
use crate::error::{HarnessError, Result};
use crate::pipeline;

/// Fixed inputs of a sweep: group covariances, r*, T and training power rule.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub specs: Vec<CovarianceSpec>,
    pub r_star: usize,
    pub coherence: usize,
    pub penalty: bool,
    pub rho_db: Option<f64>,
    pub solver: SolverConfig,
}

impl SweepSetup {
    pub fn from_scenario(sc: &Scenario) -> Result<Self> {
        sc.validate()?;
        sc.sweep.as_ref().ok_or_else(|| HarnessError::config("missing [sweep] section"))?;
        let (_, _, specs) = pipeline::covariances(sc)?;
        let pb = sc.prebeam.as_ref().expect("validated");
        let t = sc.training.as_ref().expect("validated");
        Ok(SweepSetup {
            specs,
            r_star: pb.r_star.expect("validated"),
            coherence: t.coherence,
            penalty: t.penalty,
            rho_db: t.rho_db,
            solver: sc.solver.to_config(),
        })
    }

    fn penalty_factor(&self, b: usize) -> f64 {
        if self.penalty {
            training::penalty_factor(b, self.coherence)
        } else {
            1.0
        }
    }

    /// CSIT-aware inputs for width b' at power P.
    pub fn inputs(&self, b: usize, p: f64) -> Result<PgpInputs> {
        let g = self.specs.len();
        let pb = prebeam::approximate_bd(&self.specs, &vec![self.r_star; g], &vec![b; g])?;
        let mut tc = TrainingConfig::new(b, self.coherence.max(1), p, g, 0)?;
        if let Some(r) = self.rho_db {
            tc.rho_tr = db_to_linear(r);
        }
        let est = training::estimators(&self.specs, &pb, &tc)?;
        Ok(PgpInputs::from_prebeam(&self.specs, &pb)?.with_estimates(est.into_iter().map(|e| e.rhat).collect())?)
    }

    /// Net sum SE; `None` when the (S', b') pair is infeasible.
    pub fn net_se_with(&self, inputs: &PgpInputs, b: usize, s: usize, p: f64, scheme: Scheme) -> Result<Option<f64>> {
        let g = self.specs.len();
        let streams = vec![s; g];
        let sol = match scheme {
            Scheme::Rzf => deteq::deteq_pgp_rzf_csit(inputs, &streams, p, precoding::default_alpha(s * g, b * g, p), &self.solver),
            Scheme::Zf => deteq::deteq_pgp_zf_csit(inputs, &streams, p, &self.solver),
        };
        match sol {
            Ok(sol) => Ok(Some(self.penalty_factor(b) * sol.sum_se(&streams))),
            Err(JsdmError::Infeasible(_) | JsdmError::Singular(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn net_se(&self, b: usize, s: usize, p: f64, scheme: Scheme) -> Result<Option<f64>> {
        if s > b {
            return Ok(None);
        }
        if self.penalty_factor(b) == 0.0 {
            return Ok(Some(0.0));
        }
        let inputs = match self.inputs(b, p) {
            Ok(i) => i,
            Err(HarnessError::Solver(JsdmError::Infeasible(_) | JsdmError::Singular(_))) => return Ok(None),
            Err(e) => return Err(e),
        };
        self.net_se_with(&inputs, b, s, p, scheme)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BprimeTable {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub s_prime: usize,
    /// (b', net SE); `None` marks infeasible widths.
    pub rows: Vec<(usize, Option<f64>)>,
    pub argmax: Option<usize>,
}

fn argmax(rows: &[(usize, Option<f64>)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(b, v) in rows {
        if let Some(v) = v {
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((b, v));
            }
        }
    }
    best.map(|(b, _)| b)
}

/// Net SE against b' for fixed S' (grid points run in parallel, merged in order).
pub fn sweep_bprime(setup: &SweepSetup, b_range: (usize, usize), s_prime: usize, snr_db: f64, scheme: Scheme) -> Result<BprimeTable> {
    let p = db_to_linear(snr_db);
    let rows: Vec<(usize, Option<f64>)> = (b_range.0..=b_range.1)
        .into_par_iter()
        .map(|b| setup.net_se(b, s_prime, p, scheme).map(|v| (b, v)))
        .collect::<Result<_>>()?;
    Ok(BprimeTable { snr_db, scheme, s_prime, argmax: argmax(&rows), rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopePoint {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub s_opt: usize,
    pub b_opt: usize,
    pub net_se: f64,
}

impl SlopePoint {
    pub fn slope(&self) -> f64 {
        self.s_opt as f64 / self.b_opt as f64
    }
}

/// Joint (S', b') optimum over b' in range and 1 ≤ S' ≤ b'; ties keep the smaller b', then S'.
pub fn slope_analysis(setup: &SweepSetup, b_range: (usize, usize), snr_db: f64, scheme: Scheme) -> Result<SlopePoint> {
    let p = db_to_linear(snr_db);
    let per_b: Vec<Vec<(usize, usize, f64)>> = (b_range.0..=b_range.1)
        .into_par_iter()
        .map(|b| -> Result<Vec<(usize, usize, f64)>> {
            if setup.penalty_factor(b) == 0.0 {
                return Ok(vec![(1, b, 0.0)]);
            }
            let inputs = match setup.inputs(b, p) {
                Ok(i) => i,
                Err(HarnessError::Solver(JsdmError::Infeasible(_) | JsdmError::Singular(_))) => return Ok(Vec::new()),
                Err(e) => return Err(e),
            };
            let mut out = Vec::new();
            for s in 1..=b {
                if let Some(v) = setup.net_se_with(&inputs, b, s, p, scheme)? {
                    out.push((s, b, v));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, usize, f64)> = None;
    for (s, b, v) in per_b.into_iter().flatten() {
        if best.is_none_or(|(_, _, bv)| v > bv) {
            best = Some((s, b, v));
        }
    }
    let (s_opt, b_opt, net_se) = best.ok_or_else(|| HarnessError::config("no feasible (S', b') pair in the sweep range"))?;
    Ok(SlopePoint { snr_db, scheme, s_opt, b_opt, net_se })
}
