//! In-memory run traces, their files, and the summary derived from them.
//!
//! Every reported number is computed by [`summarize`] from a [`Traces`]
//! value, so reading the trace files back reproduces the summary exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{EmpiricalDistribution, QualityHistogram};
use crate::model::{Level, SimConfig, VehicleId};
use crate::queueing::{reliability_estimate, PlaybackSample};
use crate::scheduler::{qoe_objective, Penalty};

/// Frame delay observed by one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub vehicle: VehicleId,
    pub ready: f64,
    pub latency: f64,
}

/// Quality of one chunk; `level` is −1 when idle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkRow {
    pub vehicle: VehicleId,
    pub chunk: usize,
    pub level: i64,
}

/// Slicing outcome of one re-slicing epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u64,
    pub slot: u64,
    pub weak: usize,
    pub clusters: usize,
    pub leaders: usize,
    pub free: usize,
    pub dissolved: usize,
}

/// Scheduler and queue diagnostics for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub violations: u32,
    pub starved: u32,
    pub ccp_iterations: u32,
    pub converged: bool,
    pub surrogate: f64,
    pub filled: u32,
    /// Total backlog over all vehicles after the slot, bits.
    pub backlog: f64,
}

/// Virtual queue of one vehicle at mid-run and at the end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualRecord {
    pub vehicle: VehicleId,
    pub half: f64,
    pub end: f64,
}

/// Everything a run records; the input of [`summarize`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    /// Post-warm-up buffered-playback observations.
    pub playback: Vec<PlaybackSample>,
    /// Post-warm-up frame delays.
    pub latency: Vec<LatencyRow>,
    /// `chunks[v][i]`.
    pub chunks: Vec<Vec<Level>>,
    pub epochs: Vec<EpochRecord>,
    pub slots: Vec<SlotRecord>,
    pub virtual_queues: Vec<VirtualRecord>,
}

/// Scalar results of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scheduler: String,
    pub seed: u64,
    pub slots: u64,
    pub num_vehicles: usize,
    pub num_rsus: usize,
    pub vehicles_per_rsu: f64,
    pub epsilon: f64,
    pub neighborhood_size: f64,
    pub num_rbs_rsu: usize,
    pub num_rbs_sl: usize,
    /// Fraction of active post-warm-up samples with buffered playback at or below the threshold.
    pub violation_fraction: Option<f64>,
    pub playback_samples: usize,
    pub latency_samples: usize,
    pub latency_mean_s: Option<f64>,
    pub latency_median_s: Option<f64>,
    pub latency_p99_s: Option<f64>,
    /// QoE with the exact switching indicator, summed over vehicles.
    pub network_qoe: f64,
    pub mean_vehicle_qoe: f64,
    /// The same with the s-curve penalty.
    pub network_qoe_sigmoid: f64,
    pub mean_clusters: f64,
    pub mean_leaders: f64,
    pub mean_free: f64,
    pub quality_labels: Vec<String>,
    /// Per-level fractions of scheduled chunks, then the idle fraction.
    pub quality_fractions: Vec<f64>,
    pub mean_backlog_bits: f64,
    pub constraint_violations: u64,
    pub starved_slots: u64,
    pub ccp_nonconverged: u64,
    pub mean_ccp_iterations: f64,
    pub filled_grants: u64,
    /// Largest per-vehicle growth rate of the virtual queue over the second half, bits/second.
    pub virtual_growth: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    if n == 0 { 0.0 } else { s / n as f64 }
}

/// Chunks decided by the scheduler: chunk 0 is fixed at the lowest level and skipped.
pub fn scheduled_chunks(t: &Traces) -> Vec<Vec<Level>> {
    t.chunks.iter().map(|c| c.iter().skip(1).copied().collect()).collect()
}

/// Buffered playback of active samples, the population behind the CDF.
pub fn active_buffered(t: &Traces) -> Vec<f64> {
    t.playback.iter().filter(|s| s.demanded_rate > 0.0).map(|s| s.buffered).collect()
}

pub fn summarize(t: &Traces, cfg: &SimConfig) -> RunSummary {
    let sc = &cfg.scenario;
    let levels = cfg.video.len();
    let psi = sc.playback_threshold;
    let lat = EmpiricalDistribution::new(t.latency.iter().map(|r| r.latency).collect()).ok();
    let chunks = scheduled_chunks(t);
    let qoe = qoe_objective(&chunks, sc, levels, Penalty::Indicator);
    let qoe_s = qoe_objective(&chunks, sc, levels, Penalty::Sigmoid);
    let mut hist = QualityHistogram::new(levels);
    for c in &chunks {
        for &l in c {
            hist.add(l);
        }
    }
    let half = cfg.run.duration / 2.0;
    // Chunk 0 is fixed, so reliability counts from the first quality decision.
    let warmup = psi.max(cfg.video.chunk_duration);
    RunSummary {
        scheduler: cfg.run.scheduler.name().into(),
        seed: sc.seed,
        slots: t.slots.len() as u64,
        num_vehicles: t.chunks.len(),
        num_rsus: sc.rsu_count(),
        vehicles_per_rsu: t.chunks.len() as f64 / sc.rsu_count() as f64,
        epsilon: sc.epsilon,
        neighborhood_size: sc.neighborhood_size,
        num_rbs_rsu: sc.num_rbs_rsu,
        num_rbs_sl: sc.num_rbs_sl,
        violation_fraction: reliability_estimate(&t.playback, psi, warmup),
        playback_samples: t.playback.len(),
        latency_samples: t.latency.len(),
        latency_mean_s: lat.as_ref().map(EmpiricalDistribution::mean),
        latency_median_s: lat.as_ref().map(|d| d.quantile(0.5)),
        latency_p99_s: lat.as_ref().map(|d| d.quantile(0.99)),
        network_qoe: qoe.network,
        mean_vehicle_qoe: mean(qoe.per_vehicle.iter().copied()),
        network_qoe_sigmoid: qoe_s.network,
        mean_clusters: mean(t.epochs.iter().map(|e| e.clusters as f64)),
        mean_leaders: mean(t.epochs.iter().map(|e| e.leaders as f64)),
        mean_free: mean(t.epochs.iter().map(|e| e.free as f64)),
        quality_labels: cfg.video.levels.iter().map(|l| l.label.clone()).chain(["idle".to_string()]).collect(),
        quality_fractions: hist.fractions(),
        mean_backlog_bits: mean(t.slots.iter().map(|s| s.backlog)) / t.chunks.len().max(1) as f64,
        constraint_violations: t.slots.iter().map(|s| u64::from(s.violations)).sum(),
        starved_slots: t.slots.iter().filter(|s| s.starved > 0).count() as u64,
        ccp_nonconverged: t.slots.iter().filter(|s| !s.converged).count() as u64,
        mean_ccp_iterations: mean(t.slots.iter().map(|s| f64::from(s.ccp_iterations))),
        filled_grants: t.slots.iter().map(|s| u64::from(s.filled)).sum(),
        virtual_growth: if half > 0.0 {
            t.virtual_queues.iter().map(|r| (r.end - r.half) / half).fold(0.0, f64::max)
        } else {
            0.0
        },
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn write_header(path: &Path, header: &str) -> Result<()> {
    let mut f = File::create(path)?;
    writeln!(f, "{header}")?;
    Ok(())
}

impl Traces {
    /// Writes `playback.csv`, `latency.csv`, `chunks.csv`, `epochs.csv`, `slots.csv` and `virtual.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        // Headers are written explicitly so empty traces still document their columns.
        let files: [(&str, &str, bool); 6] = [
            ("playback.csv", "time,vehicle,buffered,demanded_rate", self.playback.is_empty()),
            ("latency.csv", "vehicle,ready,latency", self.latency.is_empty()),
            ("chunks.csv", "vehicle,chunk,level", self.chunks.iter().all(Vec::is_empty)),
            ("epochs.csv", "epoch,slot,weak,clusters,leaders,free,dissolved", self.epochs.is_empty()),
            ("slots.csv", "slot,violations,starved,ccp_iterations,converged,surrogate,filled,backlog", self.slots.is_empty()),
            ("virtual.csv", "vehicle,half,end", self.virtual_queues.is_empty()),
        ];
        for (name, header, empty) in files {
            if empty {
                write_header(&dir.join(name), header)?;
            }
        }
        if !self.playback.is_empty() {
            write_rows(&dir.join("playback.csv"), &self.playback)?;
        }
        if !self.latency.is_empty() {
            write_rows(&dir.join("latency.csv"), &self.latency)?;
        }
        if !self.chunks.iter().all(Vec::is_empty) {
            let rows = self.chunks.iter().enumerate().flat_map(|(v, c)| {
                c.iter().enumerate().map(move |(i, l)| ChunkRow { vehicle: v, chunk: i, level: l.map_or(-1, |j| j as i64) })
            });
            write_rows(&dir.join("chunks.csv"), rows)?;
        }
        if !self.epochs.is_empty() {
            write_rows(&dir.join("epochs.csv"), &self.epochs)?;
        }
        if !self.slots.is_empty() {
            write_rows(&dir.join("slots.csv"), &self.slots)?;
        }
        if !self.virtual_queues.is_empty() {
            write_rows(&dir.join("virtual.csv"), &self.virtual_queues)?;
        }
        Ok(())
    }

    /// Reads back the files written by [`Traces::write`]; `num_vehicles` restores vehicles without chunks.
    pub fn read(dir: &Path, num_vehicles: usize) -> Result<Self> {
        let mut chunks = vec![Vec::new(); num_vehicles];
        for r in read_rows::<ChunkRow>(&dir.join("chunks.csv"))? {
            let c: &mut Vec<Level> = &mut chunks[r.vehicle];
            debug_assert_eq!(c.len(), r.chunk);
            c.push(usize::try_from(r.level).ok());
        }
        Ok(Self {
            playback: read_rows(&dir.join("playback.csv"))?,
            latency: read_rows(&dir.join("latency.csv"))?,
            chunks,
            epochs: read_rows(&dir.join("epochs.csv"))?,
            slots: read_rows(&dir.join("slots.csv"))?,
            virtual_queues: read_rows(&dir.join("virtual.csv"))?,
        })
    }
}

/// Writes the four report tables and `summary.json`.
pub fn write_reports(dir: &Path, t: &Traces, s: &RunSummary, cfg: &SimConfig) -> Result<()> {
    let mut f = BufWriter::new(File::create(dir.join("playback_cdf.csv"))?);
    writeln!(f, "buffered_playback_s,cdf")?;
    if let Ok(d) = EmpiricalDistribution::new(active_buffered(t)) {
        for (x, p) in d.curve(201) {
            writeln!(f, "{x},{p}")?;
        }
    }
    f.flush()?;

    let mut f = BufWriter::new(File::create(dir.join("latency_ccdf.csv"))?);
    writeln!(f, "latency_ms,ccdf")?;
    if let Ok(d) = EmpiricalDistribution::new(t.latency.iter().map(|r| r.latency).collect()) {
        for (x, p) in d.curve(201) {
            writeln!(f, "{},{}", x * 1e3, 1.0 - p)?;
        }
    }
    f.flush()?;

    let mut f = File::create(dir.join("qoe.csv"))?;
    writeln!(f, "neighborhood_size_m,network_qoe,mean_vehicle_qoe,mean_clusters")?;
    writeln!(f, "{},{},{},{}", cfg.scenario.neighborhood_size, s.network_qoe, s.mean_vehicle_qoe, s.mean_clusters)?;

    let mut f = File::create(dir.join("quality.csv"))?;
    writeln!(f, "vehicles_per_rsu,level,label,fraction")?;
    for (j, (label, frac)) in s.quality_labels.iter().zip(&s.quality_fractions).enumerate() {
        let level = if j < cfg.video.len() { j.to_string() } else { "idle".into() };
        writeln!(f, "{},{level},{label},{frac}", s.vehicles_per_rsu)?;
    }

    let mut f = File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, s)?;
    writeln!(f)?;
    Ok(())
}
