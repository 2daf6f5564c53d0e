//! The per-slot pipeline: mobility, channel, re-slicing, scheduling, queues, metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use tracing::{debug, warn};

use super::traces::{summarize, EpochRecord, LatencyRow, RunSummary, SlotRecord, Traces, VirtualRecord};
use crate::channel::{sample_channel, ActivityMap};
use crate::error::{Error, Result};
use crate::mobility::{advance, nearest_rsu, spawn_topology, RsuSite, VehicleState};
use crate::model::{prefix, stream, Level, Node, RandomSource, Role, SchedulerKind, SimConfig, SlicePartition, VehicleId};
use crate::queueing::{required_rate, step_free_queues, step_rsu_queue, PlaybackSample, QueueState, StreamLedger, VirtualKind};
use crate::scheduler::baseline::baseline2_partition;
use crate::scheduler::{check_decision, PoolSizes, Scheduler, SlotInput};
use crate::slicing::reslice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stage {
    Mobility,
    Channel,
    Reslice,
    Schedule,
    Queues,
    Metrics,
}

/// Panics if a slot's stages run out of order.
#[derive(Debug, Default)]
struct Pipeline {
    last: Option<Stage>,
}

impl Pipeline {
    fn enter(&mut self, s: Stage) {
        assert!(self.last.is_none_or(|l| l < s), "stage {s:?} after {:?}", self.last);
        self.last = Some(s);
    }

    fn finish(&mut self) {
        assert_eq!(self.last, Some(Stage::Metrics), "slot ended before metrics");
        self.last = None;
    }
}

/// Result of one simulated session.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub traces: Traces,
}

fn associate(vehicles: &[VehicleState<f64>], rsus: &[RsuSite<f64>], len: f64) -> SlicePartition {
    SlicePartition::all_compelled(&vehicles.iter().map(|v| (v.id, nearest_rsu(v.pos, rsus, len))).collect())
}

/// Optional detail traces streamed to disk while running.
struct DetailSinks {
    partition: Option<BufWriter<File>>,
    queues: Option<BufWriter<File>>,
    decisions: Option<BufWriter<File>>,
    sinr: Option<BufWriter<File>>,
}

impl DetailSinks {
    fn open(dir: Option<&Path>, level: u8) -> Result<Self> {
        let open = |name: &str, min: u8, header: &str| -> Result<Option<BufWriter<File>>> {
            match dir {
                Some(d) if level >= min => {
                    let mut w = BufWriter::new(File::create(d.join(name))?);
                    writeln!(w, "{header}")?;
                    Ok(Some(w))
                }
                _ => Ok(None),
            }
        };
        Ok(Self {
            partition: open("partition.csv", 1, "epoch,vehicle,role,serving")?,
            queues: open("queues.csv", 2, "slot,vehicle,q_b,q_s,virtual,buffered_playback_s")?,
            decisions: open("decisions.csv", 2, "slot,vehicle,serving,rbs,level,surrogate,ccp_iterations")?,
            sinr: open("sinr.csv", 3, "slot,tx,vehicle,rb,sinr_db")?,
        })
    }

    fn flush(&mut self) -> Result<()> {
        for w in [&mut self.partition, &mut self.queues, &mut self.decisions, &mut self.sinr].into_iter().flatten() {
            w.flush()?;
        }
        Ok(())
    }
}

fn level_field(l: Level) -> String {
    l.map_or_else(|| "idle".into(), |j| j.to_string())
}

/// Runs one session. With `out` set, detail traces selected by
/// `run.trace_level` are streamed into that directory.
pub fn run_slot_loop(cfg: &SimConfig, out: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    let sc = &cfg.scenario;
    let cat = &cfg.video;
    let kind = cfg.run.scheduler;
    let dt = sc.slot_duration;
    let len = sc.highway_length;
    let n_slots = cfg.num_slots();
    let rates = cat.rates();
    let levels_n = cat.len();
    let chunk_slots = (cat.chunk_duration / dt).round() as u64;
    let frame_slots = (sc.frame_duration / dt).round() as u64;
    let psi = sc.playback_threshold;
    let q0 = (psi + cat.chunk_duration) * rates[0];

    let (mut vehicles, rsus) = spawn_topology::<f64, _>(sc, &mut RandomSource::new(sc.seed, stream::MOBILITY).rng())
        .map_err(|e| Error::at(0, "mobility", e))?;
    let nv = vehicles.len();
    let nb = rsus.len();
    let all: BTreeSet<VehicleId> = (0..nv).collect();
    let sizes = PoolSizes { m_rsu: sc.num_rbs_rsu, m_sl: sc.num_rbs_sl, levels: levels_n };
    let nrb = sc.num_rbs_rsu.max(sc.num_rbs_sl);

    let mut rng_v2i = RandomSource::new(sc.seed, stream::FADING_V2I).rng();
    let mut rng_v2v = RandomSource::new(sc.seed, stream::FADING_V2V).rng();
    let mut rng_cluster = RandomSource::new(sc.seed, stream::CLUSTERING).rng();

    let mut queues = QueueState::new(nv, q0, nrb, levels_n);
    let mut streams: Vec<StreamLedger<f64>> = (0..nv)
        .map(|_| {
            let mut s = StreamLedger::new(frame_slots, dt);
            s.preload(q0, rates[0]);
            s
        })
        .collect();
    let mut levels: Vec<Level> = vec![Some(0); nv];
    let mut partition = associate(&vehicles, &rsus, len);
    let mut activity = ActivityMap::idle(nb, sc.num_rbs_rsu);
    let mut scheduler = Scheduler::new(kind, nv);
    let mut traces = Traces { chunks: vec![Vec::new(); nv], ..Default::default() };
    let mut sinks = DetailSinks::open(out, cfg.run.trace_level)?;
    let mut pipe = Pipeline::default();
    let mut latency_buf = Vec::new();
    let mut virt_half = vec![0.0; nv];

    for slot in 0..n_slots {
        let time_end = (slot + 1) as f64 * dt;

        pipe.enter(Stage::Mobility);
        if slot > 0 {
            vehicles = advance(&vehicles, dt, len).map_err(|e| Error::at(slot, "mobility", e))?;
        }

        pipe.enter(Stage::Channel);
        let epoch = slot % sc.reslicing_period == 0;
        // At epoch starts the V2I part is drawn from cloned streams to slice on,
        // then drawn for real below against the new partition.
        let mut snap = if epoch {
            sample_channel(&vehicles, &rsus, &partition, sc, &activity, &mut rng_v2i.clone(), &mut rng_v2v.clone())
        } else {
            sample_channel(&vehicles, &rsus, &partition, sc, &activity, &mut rng_v2i, &mut rng_v2v)
        };

        if epoch {
            pipe.enter(Stage::Reslice);
            let old = partition.clone();
            let mut record = EpochRecord { epoch: slot / sc.reslicing_period, slot, weak: 0, clusters: 0, leaders: 0, free: 0, dissolved: 0 };
            partition = match kind {
                SchedulerKind::Proposed => {
                    let o = reslice(&vehicles, &rsus, &snap, sc, &mut rng_cluster).map_err(|e| Error::at(slot, "slicing", e))?;
                    record.weak = o.weak.len();
                    record.dissolved = o.dissolved;
                    o.partition
                }
                SchedulerKind::Baseline1 => associate(&vehicles, &rsus, len),
                SchedulerKind::Baseline2 => baseline2_partition(&vehicles, &rsus, sc),
            };
            record.clusters = partition.num_clusters();
            record.leaders = partition.leaders.len();
            record.free = partition.num_free();
            traces.epochs.push(record);
            for v in 0..nv {
                let (was, now) = (old.leader_of(v), partition.leader_of(v));
                if was.is_some() && now.is_some() && was != now {
                    queues.q_b[v] += queues.q_s[v];
                    queues.q_s[v] = 0.0;
                }
                queues.set_role(v, if now.is_some() { VirtualKind::Y } else { VirtualKind::U });
            }
            if let Some(w) = sinks.partition.as_mut() {
                for v in 0..nv {
                    let role = partition.role(v).map_or("NONE", Role::tag);
                    let serving = partition.serving(v).map_or_else(String::new, |n| n.to_string());
                    writeln!(w, "{},{v},{role},{serving}", record.epoch)?;
                }
            }
            debug!(slot, clusters = record.clusters, weak = record.weak, "re-sliced");
            snap = sample_channel(&vehicles, &rsus, &partition, sc, &activity, &mut rng_v2i, &mut rng_v2v);
        }

        pipe.enter(Stage::Schedule);
        let boundary = slot > 0 && slot % chunk_slots == 0;
        let outcome = scheduler.schedule(&SlotInput {
            snap: &snap,
            partition: &partition,
            queues: &queues,
            catalog: cat,
            cfg: sc,
            levels: &levels,
            boundary,
        });
        let violations = match check_decision(&outcome.decision, &partition, &all, sizes) {
            Ok(()) => 0,
            Err(v) => {
                for e in &v {
                    warn!(slot, %e, "constraint violated");
                }
                v.len() as u32
            }
        };
        if boundary {
            levels.clone_from(&outcome.levels);
            if sc.num_chunks.is_some_and(|n| slot / chunk_slots >= n as u64) {
                levels.fill(None);
            }
        }
        if slot % chunk_slots == 0 {
            for v in 0..nv {
                traces.chunks[v].push(levels[v]);
            }
        }
        let d = &outcome.decision;

        pipe.enter(Stage::Queues);
        let mut cap_rsu = vec![0.0; nv];
        let mut cap_sl = vec![0.0; nv];
        let mut x = vec![vec![0.0; nrb]; nv];
        for g in &d.grants {
            let bits = snap.rb_rate(g.pool, g.vehicle, g.rb) * dt;
            match g.pool {
                Node::Rsu(_) => cap_rsu[g.vehicle] += bits,
                Node::Sl(_) => cap_sl[g.vehicle] += bits,
            }
            x[g.vehicle][g.rb] = 1.0;
        }
        let z: Vec<Vec<bool>> = levels.iter().map(|&l| prefix(l, levels_n)).collect();
        let r_req: Vec<f64> = z.iter().map(|zv| required_rate(zv, &rates)).collect();
        let arrival: Vec<f64> = r_req.iter().map(|r| r * dt).collect();
        let mut delivered = vec![0.0; nv];
        let mut capacity = vec![0.0; nv];
        let mut backhaul = vec![0.0; nv];

        for v in 0..nv {
            if partition.is_free(v) {
                continue;
            }
            let own = queues.q_b[v].min(cap_rsu[v]);
            delivered[v] = own;
            capacity[v] = cap_rsu[v];
            if let Some(members) = partition.free.get(&v) {
                let r_bs = d.backhaul_rate.get(&v).copied().unwrap_or(0.0);
                let own_req = d.leader_demand.get(&v).copied().unwrap_or(0.0);
                let budget = (cap_rsu[v] - own).min((r_bs - own_req).max(0.0) * dt);
                let want: f64 = members.iter().map(|&f| queues.q_b[f]).sum();
                if want > 0.0 {
                    for &f in members {
                        backhaul[f] = budget.min(want) * queues.q_b[f] / want;
                    }
                }
            }
            queues.q_b[v] = step_rsu_queue(queues.q_b[v], cap_rsu[v], arrival[v]);
        }
        for v in 0..nv {
            if !partition.is_free(v) {
                continue;
            }
            let serve = d.relay_rate.get(&v).copied().unwrap_or(0.0) * dt;
            delivered[v] = queues.q_s[v].min(serve);
            capacity[v] = serve;
            (queues.q_b[v], queues.q_s[v]) = step_free_queues(queues.q_b[v], queues.q_s[v], backhaul[v], serve, arrival[v]);
        }
        for v in 0..nv {
            let s = &mut streams[v];
            s.playback.demanded_rate = r_req[v];
            latency_buf.clear();
            s.deliver(delivered[v], capacity[v], slot, &mut latency_buf);
            if let Some(j) = levels[v] {
                s.arrive(arrival[v], rates[j], slot);
            }
            for l in &latency_buf {
                if l.ready >= psi {
                    traces.latency.push(LatencyRow { vehicle: v, ready: l.ready, latency: l.latency });
                }
            }
            debug_assert!(
                (s.pending() - queues.backlog(v)).abs() <= 1e-6 * q0.max(s.pending()),
                "ledger {} vs queues {} for vehicle {v}",
                s.pending(),
                queues.backlog(v)
            );
        }
        queues.step_virtual(sc.epsilon, psi, &r_req);
        let zf: Vec<Vec<f64>> = z.iter().map(|zv| zv.iter().map(|&b| f64::from(u8::from(b))).collect()).collect();
        queues.update_averages(&x, &zf);
        let served: Vec<f64> = delivered.iter().map(|b| b / dt).collect();
        scheduler.observe(&served, sc.pf_window);

        pipe.enter(Stage::Metrics);
        if time_end >= psi {
            for v in 0..nv {
                traces.playback.push(PlaybackSample {
                    time: time_end,
                    vehicle: v,
                    buffered: streams[v].playback.buffered_playback(),
                    demanded_rate: r_req[v],
                });
            }
        }
        if slot + 1 == n_slots / 2 {
            virt_half.clone_from(&queues.virt);
        }
        traces.slots.push(SlotRecord {
            slot,
            violations,
            starved: outcome.starved.len() as u32,
            ccp_iterations: outcome.ccp_iterations as u32,
            converged: outcome.converged,
            surrogate: outcome.surrogate_value,
            filled: outcome.filled as u32,
            backlog: (0..nv).map(|v| queues.backlog(v)).sum(),
        });
        if let Some(w) = sinks.queues.as_mut() {
            for v in 0..nv {
                writeln!(w, "{slot},{v},{},{},{},{}", queues.q_b[v], queues.q_s[v], queues.virt[v], streams[v].playback.buffered_playback())?;
            }
        }
        if let Some(w) = sinks.decisions.as_mut() {
            let mut held: BTreeMap<VehicleId, Vec<usize>> = BTreeMap::new();
            for g in &d.grants {
                held.entry(g.vehicle).or_default().push(g.rb);
            }
            for v in 0..nv {
                let serving = partition.serving(v).map_or_else(String::new, |n| n.to_string());
                let rbs = held.get(&v).map_or_else(String::new, |r| r.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
                writeln!(w, "{slot},{v},{serving},{rbs},{},{},{}", level_field(levels[v]), outcome.surrogate_value, outcome.ccp_iterations)?;
            }
        }
        if let Some(w) = sinks.sinr.as_mut() {
            for g in &d.grants {
                writeln!(w, "{slot},{},{},{},{}", g.pool, g.vehicle, g.rb, crate::scalar::to_db(snap.sinr(g.pool, g.vehicle, g.rb)))?;
            }
        }
        activity = ActivityMap::from_decision(d, nb, sc.num_rbs_rsu, sc.num_rbs_sl);
        pipe.finish();
    }
    sinks.flush()?;

    traces.virtual_queues = (0..nv).map(|v| VirtualRecord { vehicle: v, half: virt_half[v], end: queues.virt[v] }).collect();
    let summary = summarize(&traces, cfg);
    Ok(RunOutput { summary, traces })
}
