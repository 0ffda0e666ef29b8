//! Result records, the versioned CSV format and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Scenario;
use crate::error::Result;

pub const SCHEMA: &str = "jsdm-results/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub scenario_id: String,
    pub method: String,
    /// Empty when the metric does not depend on SNR.
    pub snr_db: Option<f64>,
    pub group: Option<usize>,
    /// User index, or "all" for aggregates.
    pub user: String,
    pub metric: String,
    pub value: f64,
}

/// Builder that fills the scenario id and method into every record.
#[derive(Debug, Clone)]
pub struct Records {
    pub scenario_id: String,
    pub rows: Vec<ResultRecord>,
}

impl Records {
    pub fn new(scenario_id: impl Into<String>) -> Self {
        Records { scenario_id: scenario_id.into(), rows: Vec::new() }
    }

    pub fn push(&mut self, method: &str, snr_db: Option<f64>, group: Option<usize>, user: impl ToString, metric: &str, value: f64) {
        self.rows.push(ResultRecord {
            scenario_id: self.scenario_id.clone(),
            method: method.to_string(),
            snr_db,
            group,
            user: user.to_string(),
            metric: metric.to_string(),
            value,
        });
    }

    pub fn aggregate(&mut self, method: &str, snr_db: Option<f64>, metric: &str, value: f64) {
        self.push(method, snr_db, None, "all", metric, value);
    }

    pub fn find(&self, method: &str, snr_db: Option<f64>, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.snr_db == snr_db && r.metric == metric && r.group.is_none())
            .map(|r| r.value)
    }
}

pub fn write_csv<W: Write>(mut w: W, rows: &[ResultRecord]) -> Result<()> {
    writeln!(w, "# schema={SCHEMA}")?;
    let mut cw = csv::Writer::from_writer(w);
    for r in rows {
        cw.serialize(r)?;
    }
    if rows.is_empty() {
        cw.write_record(["scenario_id", "method", "snr_db", "group", "user", "metric", "value"])?;
    }
    cw.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub scenario_id: String,
    pub config_hash: String,
    pub command: String,
    pub seed: u64,
    pub mc_draws: usize,
    pub schema: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub scenarios: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn for_run(sc: &Scenario, command: &str, rows: usize) -> Self {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scenarios: vec![ManifestEntry {
                scenario_id: sc.id.clone(),
                config_hash: sc.config_hash(),
                command: command.to_string(),
                seed: sc.seed,
                mc_draws: sc.mc_draws,
                schema: SCHEMA.to_string(),
                rows,
            }],
        }
    }
}

/// `results.csv` → `results.manifest.toml`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.toml")
}

/// Writes the CSV and its manifest next to it.
pub fn write_outputs(path: &Path, sc: &Scenario, command: &str, rows: &[ResultRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_csv(std::fs::File::create(path)?, rows)?;
    let m = Manifest::for_run(sc, command, rows.len());
    let text = toml::to_string(&m).expect("manifest serializes");
    std::fs::write(manifest_path(path), text)?;
    Ok(())
}
