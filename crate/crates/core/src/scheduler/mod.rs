//! Per-slot RB assignment and per-chunk quality selection.
//!
//! The proposed scheduler minimizes the drift-plus-penalty bound pool by pool
//! with the concave-convex procedure. Quality is chosen jointly with RBs at
//! chunk boundaries and held in between, when the RB problem is solved
//! exactly. RBs the bound leaves idle can be handed to backlogged vehicles
//! by max-weight. Two proportional-fair baselines share the same plumbing.

pub mod backhaul;
pub mod baseline;
pub mod ccp;
pub mod coefficients;
pub mod constraints;
pub mod oracle;
pub mod qoe;

use std::collections::BTreeMap;

use thiserror::Error;

pub use backhaul::{enforce_backhaul, enforce_backhaul_decision, BackhaulStatus};
pub use ccp::{ccp_solve, initial_anchor, surrogate, true_objective, Assignment, CcpOutcome};
pub use coefficients::{compute_coefficients, pool_coefficients, pool_members, queue_pressure, relay_pressure, DppCoefficients};
pub use constraints::{check_decision, ConstraintViolation, PoolSizes};
pub use oracle::{equivalence_suite, micro_instance, oracle_solve, relative_gap, search_space, EquivalenceReport, ORACLE_LIMIT};
pub use qoe::{chunk_score, level_weights, qoe_objective, sigmoid_penalty, Penalty, QoeScore};

use crate::channel::ChannelSnapshot;
use crate::model::{prefix, Level, Node, RbGrant, ScenarioConfig, SchedulerKind, SlicePartition, SlotDecision, VehicleId, VideoCatalog};
use crate::queueing::{required_rate, QueueState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedulerError {
    #[error("instance too large for exhaustive search: {size} points")]
    InstanceTooLarge { size: u128 },
    #[error("decision violates constraints: {0}")]
    Infeasible(String),
}

/// Decision of one slot with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerOutcome {
    pub decision: SlotDecision,
    /// Quality per vehicle for the current chunk.
    pub levels: Vec<Level>,
    /// Sum over pools of the majorizer value at the returned point.
    pub surrogate_value: f64,
    /// Largest iteration count over pools.
    pub ccp_iterations: usize,
    pub converged: bool,
    /// Leaders whose V2I rate could not cover their own demand.
    pub starved: Vec<VehicleId>,
    /// Grants added by the work-conserving pass.
    pub filled: usize,
}

/// Everything a scheduler observes at the start of a slot.
#[derive(Debug, Clone, Copy)]
pub struct SlotInput<'a> {
    pub snap: &'a ChannelSnapshot<f64>,
    pub partition: &'a SlicePartition,
    pub queues: &'a QueueState<f64>,
    pub catalog: &'a VideoCatalog,
    pub cfg: &'a ScenarioConfig,
    /// Quality held from the current chunk; decided afresh when `boundary` is set.
    pub levels: &'a [Level],
    pub boundary: bool,
}

/// Stateful scheduler: keeps the previous slot's RB owners as the CCP anchor
/// and proportional-fair throughput averages.
#[derive(Debug, Clone)]
pub struct Scheduler {
    pub kind: SchedulerKind,
    prev_owner: BTreeMap<Node, Vec<Option<VehicleId>>>,
    pf_avg: Vec<f64>,
}

/// Volume each vehicle could still use from `pool` this slot.
fn pool_backlog(pool: Node, members: &[VehicleId], q: &QueueState<f64>, p: &SlicePartition) -> Vec<f64> {
    let mut b = vec![0.0; q.q_b.len()];
    for &v in members {
        b[v] = match pool {
            Node::Sl(_) => q.q_s[v],
            Node::Rsu(_) => q.q_b[v] + p.free.get(&v).map_or(0.0, |f| f.iter().map(|&u| q.q_b[u]).sum()),
        };
    }
    b
}

/// Releases RBs whose owner's backlog is already covered by its better RBs,
/// then gives each idle RB to the vehicle with the largest `rate × remaining backlog`.
fn work_conserving_fill(
    pool: Node,
    owner: &mut [Option<VehicleId>],
    members: &[VehicleId],
    snap: &ChannelSnapshot<f64>,
    mut backlog: Vec<f64>,
    dt: f64,
) -> usize {
    let mut held: Vec<(f64, usize, VehicleId)> =
        owner.iter().enumerate().filter_map(|(m, o)| o.map(|v| (snap.rb_rate(pool, v, m), m, v))).collect();
    held.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (rate, m, v) in held {
        if backlog[v] <= 0.0 {
            owner[m] = None;
        } else {
            backlog[v] -= rate * dt;
        }
    }
    let mut added = 0;
    for m in 0..owner.len() {
        if owner[m].is_some() {
            continue;
        }
        let mut best: Option<(f64, VehicleId)> = None;
        for &v in members {
            if backlog[v] <= 0.0 {
                continue;
            }
            let w = snap.rb_rate(pool, v, m) * backlog[v];
            if w > 0.0 && best.is_none_or(|b| w > b.0) {
                best = Some((w, v));
            }
        }
        if let Some((_, v)) = best {
            owner[m] = Some(v);
            backlog[v] -= snap.rb_rate(pool, v, m) * dt;
            added += 1;
        }
    }
    added
}

impl Scheduler {
    pub fn new(kind: SchedulerKind, num_vehicles: usize) -> Self {
        Self { kind, prev_owner: BTreeMap::new(), pf_avg: vec![1.0; num_vehicles] }
    }

    pub fn schedule(&mut self, input: &SlotInput<'_>) -> SchedulerOutcome {
        let SlotInput { snap, partition, queues, catalog, cfg, .. } = *input;
        let dt = cfg.slot_duration;
        let mut levels = input.levels.to_vec();
        let mut owners: BTreeMap<Node, Vec<Option<VehicleId>>> = BTreeMap::new();
        let (mut surrogate_value, mut ccp_iterations, mut converged, mut filled) = (0.0, 0, true, 0);
        let members = pool_members(partition);

        match self.kind {
            SchedulerKind::Proposed => {
                let frozen = (!input.boundary).then_some(input.levels);
                for c in compute_coefficients(queues, snap, partition, catalog, cfg, frozen) {
                    let local: BTreeMap<VehicleId, usize> = c.vehicles.iter().enumerate().map(|(i, &v)| (v, i)).collect();
                    let mut anchor = initial_anchor(&c);
                    if let Some(prev) = self.prev_owner.get(&c.pool) {
                        for (m, o) in prev.iter().enumerate().take(c.num_rbs) {
                            anchor.owner[m] = o.and_then(|v| local.get(&v).copied());
                        }
                    }
                    if input.boundary {
                        for (i, &v) in c.vehicles.iter().enumerate() {
                            anchor.level[i] = input.levels[v];
                        }
                    }
                    let out = ccp_solve(&c, anchor, cfg.ccp_max_iters, cfg.ccp_tolerance);
                    surrogate_value += out.surrogate_value;
                    ccp_iterations = ccp_iterations.max(out.iterations);
                    converged &= out.converged;
                    for (i, &v) in c.vehicles.iter().enumerate() {
                        levels[v] = out.assignment.level[i];
                    }
                    let mut owner: Vec<Option<VehicleId>> =
                        out.assignment.owner.iter().map(|o| o.map(|i| c.vehicles[i])).collect();
                    if cfg.work_conserving {
                        let backlog = pool_backlog(c.pool, &c.vehicles, queues, partition);
                        filled += work_conserving_fill(c.pool, &mut owner, &c.vehicles, snap, backlog, dt);
                    }
                    owners.insert(c.pool, owner);
                }
            }
            SchedulerKind::Baseline1 | SchedulerKind::Baseline2 => {
                for (&pool, vs) in &members {
                    let mut backlog = pool_backlog(pool, vs, queues, partition);
                    owners.insert(pool, pf_allocate_pool(pool, vs, snap, &mut backlog, &self.pf_avg, dt));
                    if input.boundary {
                        for &v in vs {
                            levels[v] = baseline::rate_matched_level(snap, pool, v, vs.len(), catalog);
                        }
                    }
                }
            }
        }

        let mut decision = SlotDecision::default();
        for (&pool, owner) in &owners {
            for (rb, o) in owner.iter().enumerate() {
                if let Some(vehicle) = *o {
                    decision.grants.push(RbGrant { pool, rb, vehicle });
                }
            }
        }
        let j = catalog.len();
        let rates = catalog.rates();
        for v in 0..levels.len() {
            decision.quality.insert(v, prefix(levels[v], j));
        }
        let link = |v: VehicleId, pool: Node| snap.link_rate(pool, v, owners.get(&pool).into_iter().flatten().enumerate().filter(|(_, o)| **o == Some(v)).map(|(m, _)| m));
        for &s in partition.free.keys() {
            if let Some(pool @ Node::Rsu(_)) = partition.serving(s) {
                decision.backhaul_rate.insert(s, link(s, pool));
                decision.leader_demand.insert(s, required_rate(&decision.quality[&s], &rates));
            }
        }
        for (&s, fs) in &partition.free {
            for &f in fs {
                decision.relay_rate.insert(f, link(f, Node::Sl(s)));
            }
        }
        let starved = enforce_backhaul_decision(&mut decision, partition);
        self.prev_owner = owners;
        SchedulerOutcome { decision, levels, surrogate_value, ccp_iterations, converged, starved, filled }
    }

    /// Folds the rates actually delivered this slot into the proportional-fair averages.
    pub fn observe(&mut self, served_rate: &[f64], window: f64) {
        let a = 1.0 / window;
        for (avg, &r) in self.pf_avg.iter_mut().zip(served_rate) {
            *avg = (1.0 - a) * *avg + a * r;
        }
    }
}

fn pf_allocate_pool(pool: Node, vs: &[VehicleId], snap: &ChannelSnapshot<f64>, backlog: &mut [f64], avg: &[f64], dt: f64) -> Vec<Option<VehicleId>> {
    baseline::pf_allocate(pool, vs, snap, backlog, avg, dt)
}
