//! Sweep campaigns: expansion into cells, parallel execution, manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::sim::run_slot_loop;
use super::traces::{write_reports, RunSummary};
use crate::error::{Error, Result};
use crate::model::{derive_seed, SchedulerKind, SimConfig};

/// One swept parameter, addressed as `section.field` (e.g. `scenario.epsilon`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub path: String,
    pub values: Vec<toml::Value>,
}

fn default_replications() -> usize {
    1
}

fn default_schedulers() -> Vec<SchedulerKind> {
    SchedulerKind::ALL.to_vec()
}

/// A campaign over the Cartesian product of sweeps, schedulers and replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    /// Configuration shared by every cell, in the single-run file format.
    #[serde(default)]
    pub base: toml::Table,
    #[serde(default, rename = "sweep")]
    pub sweeps: Vec<Sweep>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_schedulers")]
    pub schedulers: Vec<SchedulerKind>,
    pub output: PathBuf,
    /// Cells run concurrently; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
}

/// A fully resolved run of a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: String,
    pub config: SimConfig,
    pub sweep_values: Vec<(String, toml::Value)>,
    pub replication: usize,
}

/// Manifest entry of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell: String,
    pub scheduler: String,
    pub replication: usize,
    pub seed: u64,
    pub sweep: Vec<(String, String)>,
    pub config_sha256: String,
    pub status: String,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub cells: Vec<CellRecord>,
}

impl Manifest {
    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(|c| c.status == "ok")
    }
}

/// Hex SHA-256 of the resolved configuration file.
pub fn config_hash(cfg: &SimConfig) -> Result<String> {
    Ok(hex::encode(Sha256::digest(cfg.to_toml()?.as_bytes())))
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    let (last, sections) = parts.split_last().ok_or_else(|| Error::Plan("empty sweep path".into()))?;
    let mut t = table;
    for s in sections {
        t = t
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Plan(format!("{path}: {s} is not a section")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Expands the plan, rejecting it before any run if a sweep names an
    /// unknown field or produces an invalid configuration.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if self.replications == 0 {
            return Err(Error::Plan("replications must be at least 1".into()));
        }
        if self.schedulers.is_empty() {
            return Err(Error::Plan("no schedulers selected".into()));
        }
        let base: SimConfig = self.base.clone().try_into()?;
        base.validate()?;
        let base_seed = base.scenario.seed;

        let mut combos: Vec<Vec<usize>> = vec![vec![]];
        for s in &self.sweeps {
            if s.values.is_empty() {
                return Err(Error::Plan(format!("sweep over {} has no values", s.path)));
            }
            combos = combos.into_iter().flat_map(|c| (0..s.values.len()).map(move |i| [c.clone(), vec![i]].concat())).collect();
        }

        let mut out = Vec::new();
        for combo in &combos {
            let mut table = self.base.clone();
            let mut sweep_values = Vec::new();
            for (s, &i) in self.sweeps.iter().zip(combo) {
                set_path(&mut table, &s.path, s.values[i].clone())?;
                sweep_values.push((s.path.clone(), s.values[i].clone()));
            }
            let cfg: SimConfig = table
                .try_into()
                .map_err(|e: toml::de::Error| Error::Plan(format!("sweep {:?}: {e}", sweep_values)))?;
            cfg.validate()?;
            let tag: String = combo.iter().map(|i| format!("s{i}")).collect::<Vec<_>>().join("-");
            for rep in 0..self.replications {
                let idx: Vec<u64> = combo.iter().map(|&i| i as u64).chain([rep as u64]).collect();
                let seed = derive_seed(base_seed, &idx);
                for &kind in &self.schedulers {
                    let mut c = cfg.clone();
                    c.scenario.seed = seed;
                    c.run.scheduler = kind;
                    let id = if tag.is_empty() { format!("{kind}_r{rep}") } else { format!("{tag}_{kind}_r{rep}") };
                    out.push(Cell { id, config: c, sweep_values: sweep_values.clone(), replication: rep });
                }
            }
        }
        Ok(out)
    }
}

/// Runs one configuration and writes its reports (and traces, when requested) into `dir`.
pub fn run_cell(cfg: &SimConfig, dir: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    let out = run_slot_loop(cfg, Some(dir))?;
    if cfg.run.trace_level >= 1 {
        out.traces.write(dir)?;
    }
    write_reports(dir, &out.traces, &out.summary, cfg)?;
    Ok(out.summary)
}

/// Runs every cell, writing one directory per cell and `manifest.json` at the root.
/// Failed cells are recorded and do not stop the others.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Manifest> {
    let cells = plan.cells()?;
    std::fs::create_dir_all(&plan.output)?;
    let work = || {
        cells
            .par_iter()
            .map(|c| {
                let start = Instant::now();
                let status = match run_cell(&c.config, &plan.output.join(&c.id)) {
                    Ok(_) => "ok".to_string(),
                    Err(e) => {
                        tracing::error!(cell = %c.id, error = %e, "cell failed");
                        format!("failed: {e}")
                    }
                };
                Ok(CellRecord {
                    cell: c.id.clone(),
                    scheduler: c.config.run.scheduler.name().into(),
                    replication: c.replication,
                    seed: c.config.scenario.seed,
                    sweep: c.sweep_values.iter().map(|(p, v)| (p.clone(), value_label(v))).collect(),
                    config_sha256: config_hash(&c.config)?,
                    status,
                    wall_time_s: start.elapsed().as_secs_f64(),
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    let records = match plan.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Plan(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let manifest = Manifest { version: env!("CARGO_PKG_VERSION").into(), cells: records };
    let mut f = std::fs::File::create(plan.output.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    Ok(manifest)
}
