use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;
use vslice::harness::{run_cell, run_plan, ExperimentPlan};
use vslice::model::{SchedulerKind, SimConfig};
use vslice::scheduler::equivalence_suite;

#[derive(Parser)]
#[command(name = "vslice", version, about = "Sliced vehicular video-streaming simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration.
    Run {
        config: Option<PathBuf>,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scheduler: Option<SchedulerKind>,
        #[arg(long)]
        duration: Option<f64>,
        /// 0: reports only, 1: sample and partition traces, 2: queue and decision traces, 3: SINR.
        #[arg(long)]
        trace_level: Option<u8>,
    },
    /// Run a sweep campaign.
    Plan {
        plan: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trace_level: Option<u8>,
    },
    /// Check a configuration file and report every violated invariant.
    Validate { config: PathBuf },
    /// Compare the scheduler against exhaustive search on random small instances.
    Oracle {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the default configuration.
    Defaults,
}

fn load(path: Option<&PathBuf>) -> Result<SimConfig> {
    match path {
        None => Ok(SimConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SimConfig::from_toml(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn main() -> Result<ExitCode> {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::from_default_env()).with_writer(std::io::stderr).init();
    match Cli::parse().cmd {
        Command::Run { config, out, seed, scheduler, duration, trace_level } => {
            let mut cfg = load(config.as_ref())?;
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            if let Some(s) = scheduler {
                cfg.run.scheduler = s;
            }
            if let Some(d) = duration {
                cfg.run.duration = d;
            }
            if let Some(t) = trace_level {
                cfg.run.trace_level = t;
            }
            let summary = run_cell(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Plan { plan, out, seed, trace_level } => {
            let text = std::fs::read_to_string(&plan).with_context(|| format!("reading {}", plan.display()))?;
            let mut p = ExperimentPlan::from_toml(&text)?;
            if let Some(o) = out {
                p.output = o;
            }
            let scenario = p.base.entry("scenario").or_insert_with(|| toml::Table::new().into());
            if let (Some(s), Some(t)) = (seed, scenario.as_table_mut()) {
                t.insert("seed".into(), toml::Value::Integer(s as i64));
            }
            if let Some(level) = trace_level {
                if let Some(t) = p.base.entry("run").or_insert_with(|| toml::Table::new().into()).as_table_mut() {
                    t.insert("trace_level".into(), toml::Value::Integer(level.into()));
                }
            }
            let manifest = run_plan(&p)?;
            let failed = manifest.cells.iter().filter(|c| c.status != "ok").count();
            println!("{} cells, {failed} failed, manifest in {}", manifest.cells.len(), p.output.join("manifest.json").display());
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Validate { config } => {
            let cfg = load(Some(&config))?;
            match cfg.validate() {
                Ok(()) => println!("valid"),
                Err(errs) => {
                    for v in &errs.0 {
                        println!("{v}");
                    }
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Command::Oracle { instances, seed } => {
            let r = equivalence_suite(&SimConfig::default().scenario, instances, seed)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            if r.within_5pct < r.instances || r.exact * 5 < r.instances * 4 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Defaults => print!("{}", SimConfig::default().to_toml()?),
    }
    Ok(ExitCode::SUCCESS)
}
