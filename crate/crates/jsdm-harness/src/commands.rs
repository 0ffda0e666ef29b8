//! One function per CLI subcommand, each producing result records.

use jsdm::layout3d::{self, PatternTable};
use jsdm::prebeam;
use jsdm::precoding::Scheme;
use jsdm::spectrum::{self, CdfSource, SpectralDensity, UlaConfig};

use crate::config::{db_to_linear, GeometryConfig, Scenario};
use crate::error::{HarnessError, Result};
use crate::output::Records;
use crate::pipeline;
use crate::sweep::{self, SweepSetup};
use crate::validate;

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mc_draws: Option<usize>,
    pub threads: usize,
}

impl Overrides {
    pub fn apply(&self, sc: &mut Scenario) {
        if let Some(s) = self.seed {
            sc.seed = s;
        }
        if let Some(d) = self.mc_draws {
            sc.mc_draws = d;
        }
    }
}

fn scheme_tag(s: Scheme) -> &'static str {
    match s {
        Scheme::Rzf => "rzf",
        Scheme::Zf => "zf",
    }
}

pub fn covariance(sc: &Scenario) -> Result<Records> {
    sc.validate()?;
    let (_, _, specs) = pipeline::covariances(sc)?;
    let mut rec = Records::new(&sc.id);
    for (g, s) in specs.iter().enumerate() {
        let grp = Some(g);
        rec.push("covariance", None, grp, "all", "rank", s.rank as f64);
        rec.push("covariance", None, grp, "all", "r_star", s.r_star as f64);
        rec.push("covariance", None, grp, "all", "retained_trace", s.retained_trace());
        rec.push("covariance", None, grp, "all", "gain", s.gain);
        for (i, l) in s.lambda.iter().enumerate() {
            rec.push("covariance", None, grp, i, "lambda", *l);
        }
        let m = s.dim();
        for i in 0..m {
            for j in 0..m {
                let z = s.r[(i, j)];
                rec.push("covariance", None, grp, format!("{i}:{j}"), "r_re", z.re);
                rec.push("covariance", None, grp, format!("{i}:{j}"), "r_im", z.im);
            }
        }
    }
    Ok(rec)
}

/// Symbol S(ξ) on a grid and the three eigenvalue lists per group (ULA only).
pub fn spectrum(sc: &Scenario, grid: usize) -> Result<Records> {
    sc.validate()?;
    let (m, d) = match sc.geometry {
        Some(GeometryConfig::Ula { antennas, spacing }) => (antennas, spacing),
        _ => return Err(HarnessError::config("spectrum needs a ULA geometry")),
    };
    let mut rec = Records::new(&sc.id);
    for (g, prof) in sc.profiles()?.iter().enumerate() {
        let grp = Some(g);
        let sd = SpectralDensity::from_profile(d, prof)?;
        rec.push("spectrum", None, grp, "all", "support_measure", sd.support_measure());
        rec.push("spectrum", None, grp, "all", "asymptotic_rank", spectrum::asymptotic_rank(d, prof.theta, prof.delta)?.rho);
        for i in 0..grid {
            let xi = -0.5 + (i as f64 + 0.5) / grid as f64;
            rec.push("spectrum", None, grp, i, "xi", xi);
            rec.push("spectrum", None, grp, i, "density", sd.eval(xi).value);
        }
        let cfg = UlaConfig::new(m, d, prof.theta, prof.delta);
        let mut lists = Vec::new();
        for (src, tag) in [(CdfSource::Exact, "eig_exact"), (CdfSource::Circulant, "eig_circulant"), (CdfSource::SampledS, "eig_sampled")] {
            let v = spectrum::eigenvalue_cdf(src, &cfg)?;
            for (i, x) in v.iter().enumerate() {
                rec.push("spectrum", None, grp, i, tag, *x);
            }
            lists.push(v);
        }
        rec.push("spectrum", None, grp, "all", "ks_exact_circulant", spectrum::ks_distance(&lists[0], &lists[1]));
        rec.push("spectrum", None, grp, "all", "ks_exact_sampled", spectrum::ks_distance(&lists[0], &lists[2]));
        rec.push("spectrum", None, grp, "all", "fraction_above_1e-6", spectrum::fraction_above(&lists[0], 1e-6));
    }
    Ok(rec)
}

pub fn prebeam(sc: &Scenario) -> Result<Records> {
    let planar = pipeline::build(sc)?;
    let pb = planar.prebeam()?;
    let method = pipeline::method_label(sc);
    let mut rec = Records::new(&sc.id);
    let leak = prebeam::bd_leakage(pb, &planar.specs)?;
    for g in 0..pb.groups() {
        rec.push(&method, None, Some(g), "all", "b", pb.b[g] as f64);
        for h in 0..pb.groups() {
            rec.push(&method, None, Some(g), h, "leakage", leak[(g, h)]);
        }
    }
    let tu = prebeam::tall_unitary_check(&pb.blocks);
    rec.aggregate(&method, None, "max_offdiag", tu.max_offdiag);
    rec.aggregate(&method, None, "tall_unitary", if tu.is_tall_unitary { 1.0 } else { 0.0 });
    Ok(rec)
}

pub fn deteq(sc: &Scenario) -> Result<Records> {
    let planar = pipeline::build(sc)?;
    let method = pipeline::method_label(sc);
    let mut rec = Records::new(&sc.id);
    for &snr in &sc.snr_db {
        push_deteq(&mut rec, &method, &pipeline::deteq_point(sc, &planar, snr)?);
    }
    Ok(rec)
}

fn push_deteq(rec: &mut Records, method: &str, pt: &pipeline::DetEqPoint) {
    let snr = Some(pt.snr_db);
    let s = &pt.solution;
    for g in 0..s.gamma.len() {
        rec.push(method, snr, Some(g), "all", "m_o", s.m[g.min(s.m.len() - 1)]);
        rec.push(method, snr, Some(g), "all", "gamma_o_db", 10.0 * s.gamma[g].log10());
    }
    rec.aggregate(method, snr, "iterations", s.iterations as f64);
    rec.aggregate(method, snr, "residual", s.residual);
    rec.aggregate(method, snr, "sum_se_deteq", pt.sum_se);
}

pub fn montecarlo(sc: &Scenario, threads: usize) -> Result<Records> {
    let planar = pipeline::build(sc)?;
    let method = pipeline::method_label(sc);
    let mut rec = Records::new(&sc.id);
    for &snr in &sc.snr_db {
        let det = match pipeline::deteq_point(sc, &planar, snr) {
            Ok(p) => Some(p),
            Err(HarnessError::Config(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some(p) = &det {
            push_deteq(&mut rec, &method, p);
        }
        if sc.mc_draws == 0 {
            continue;
        }
        let mc = pipeline::mc_point(sc, &planar, snr, sc.mc_draws, threads)?;
        for (g, v) in mc.gamma_db.iter().enumerate() {
            rec.push(&method, Some(snr), Some(g), "all", "gamma_mc_db", *v);
            rec.push(&method, Some(snr), Some(g), "all", "group_se_mc", mc.group_se[g]);
        }
        rec.aggregate(&method, Some(snr), "sum_se_mc", mc.sum_se);
        if let Some(p) = &det {
            rec.aggregate(&method, Some(snr), "sum_se_rel_diff", (p.sum_se - mc.sum_se).abs() / mc.sum_se);
        }
    }
    Ok(rec)
}

pub fn sweep(sc: &Scenario) -> Result<Records> {
    let setup = SweepSetup::from_scenario(sc)?;
    let sw = sc.sweep.as_ref().expect("validated");
    let scheme: Scheme = sc.precoding.as_ref().map_or(Scheme::Rzf, |p| p.scheme.into());
    let range = (sw.b_min, sw.b_max);
    let mut rec = Records::new(&sc.id);
    for &snr in &sc.snr_db {
        let tab = sweep::sweep_bprime(&setup, range, sw.s_prime, snr, scheme)?;
        let method = format!("bprime/{}/s{}", scheme_tag(scheme), sw.s_prime);
        for (b, v) in &tab.rows {
            rec.push(&method, Some(snr), None, b, "net_se", v.unwrap_or(f64::NAN));
        }
        if let Some(b) = tab.argmax {
            rec.aggregate(&method, Some(snr), "argmax_b", b as f64);
        }
        for &s in &sw.schemes {
            let pt = sweep::slope_analysis(&setup, range, snr, s.into())?;
            let method = format!("slope/{}", scheme_tag(s.into()));
            rec.aggregate(&method, Some(snr), "s_opt", pt.s_opt as f64);
            rec.aggregate(&method, Some(snr), "b_opt", pt.b_opt as f64);
            rec.aggregate(&method, Some(snr), "slope", pt.slope());
            rec.aggregate(&method, Some(snr), "net_se", pt.net_se);
        }
    }
    Ok(rec)
}

/// 3D scheduling pipeline: best allocation per pattern and both fairness criteria.
pub fn layout3d_tables(sc: &Scenario) -> Result<Vec<(f64, PatternTable)>> {
    sc.validate()?;
    let sec = sc.layout3d.as_ref().ok_or_else(|| HarnessError::config("missing [layout3d] section"))?;
    let params = sec.params();
    let lay = layout3d::build_layout(&params)?;
    let patterns = sec.patterns.clone().unwrap_or_else(|| layout3d::interleaved_patterns(params.regions));
    let pats: Vec<layout3d::Pattern> = patterns
        .iter()
        .map(|r| layout3d::Pattern { region_ids: r.clone(), nu: 1.0 / patterns.len() as f64 })
        .collect();
    layout3d::validate_patterns(&pats, params.regions).map_err(|e| HarnessError::config(e.to_string()))?;
    let inst = layout3d::instantiate(&lay, &patterns)?;
    let grid = sec.alpha_grid.clone().unwrap_or_else(layout3d::default_alpha_grid);
    let cfg = sc.solver.to_config();
    let mut out = Vec::new();
    for &snr in &sc.snr_db {
        for &s in &sec.schemes {
            out.push((snr, layout3d::evaluate_patterns(&inst, s.into(), db_to_linear(snr), &grid, &cfg)?));
        }
    }
    Ok(out)
}

pub fn layout3d(sc: &Scenario) -> Result<Records> {
    let mut rec = Records::new(&sc.id);
    let sec = sc.layout3d.as_ref().ok_or_else(|| HarnessError::config("missing [layout3d] section"))?;
    let patterns = sec.patterns.clone().unwrap_or_else(|| layout3d::interleaved_patterns(sec.params().regions));
    for (snr, tab) in layout3d_tables(sc)? {
        let method = format!("layout3d/{}", scheme_tag(tab.scheme));
        let snr = Some(snr);
        for (q, a) in tab.allocations.iter().enumerate() {
            rec.push(&method, snr, Some(q), "all", "r_star_pattern", a.sum_se);
            rec.push(&method, snr, Some(q), "all", "nu_pfs", tab.pfs.nu[q]);
            rec.push(&method, snr, Some(q), "all", "nu_maxmin", tab.maxmin.nu[q]);
            for (i, region) in patterns[q].iter().enumerate() {
                rec.push(&method, snr, Some(q), format!("region{region}"), "alpha", a.alphas[i]);
                rec.push(&method, snr, Some(q), format!("region{region}"), "region_se", a.region_se[i]);
                rec.push(&method, snr, Some(q), format!("region{region}"), "streams", a.streams[i].iter().sum::<usize>() as f64);
            }
        }
        rec.aggregate(&method, snr, "pfs_total", tab.pfs.total);
        rec.aggregate(&method, snr, "maxmin_total", tab.maxmin.total);
        rec.aggregate(&method, snr, "raw_total", tab.pfs.raw_total);
    }
    Ok(rec)
}

/// Invariant suites; the scenario only supplies the id.
pub fn validate(id: &str) -> (Records, usize) {
    let mut rec = Records::new(id);
    let mut failed = 0;
    for c in validate::all_suites() {
        let method = format!("validate/{}", c.suite);
        rec.push(&method, None, None, &c.name, "value", c.value);
        rec.push(&method, None, None, &c.name, "bound", c.bound);
        rec.push(&method, None, None, &c.name, "pass", if c.passed { 1.0 } else { 0.0 });
        if !c.passed {
            failed += 1;
        }
    }
    (rec, failed)
}
