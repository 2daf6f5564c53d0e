//! Reference schedulers: proportional-fair RB allocation with rate-matched quality.
//!
//! Baseline 1 serves everyone over V2I. Baseline 2 additionally relays
//! cell-edge vehicles through their nearest mid-cell neighbour.

use std::collections::BTreeSet;

use crate::channel::ChannelSnapshot;
use crate::mobility::{nearest_rsu, ring_distance, ring_dx, RsuSite, VehicleState};
use crate::model::{check_partition, Level, Node, ScenarioConfig, SlicePartition, VehicleId, VideoCatalog};

/// Proportional-fair owner per RB: the backlogged vehicle maximizing
/// `rate / average throughput`, lowest id on ties. Each grant draws down the
/// vehicle's remaining backlog by one RB's volume.
pub fn pf_allocate(
    pool: Node,
    members: &[VehicleId],
    snap: &ChannelSnapshot<f64>,
    backlog: &mut [f64],
    avg: &[f64],
    dt: f64,
) -> Vec<Option<VehicleId>> {
    (0..snap.pool_size(pool))
        .map(|m| {
            let mut best: Option<(f64, VehicleId)> = None;
            for &v in members {
                if backlog[v] <= 0.0 {
                    continue;
                }
                let r = snap.rb_rate(pool, v, m);
                if r <= 0.0 {
                    continue;
                }
                let metric = r / avg[v].max(1.0);
                if best.is_none_or(|b| metric > b.0) {
                    best = Some((metric, v));
                }
            }
            best.map(|(_, v)| {
                backlog[v] -= snap.rb_rate(pool, v, m) * dt;
                v
            })
        })
        .collect()
}

/// Highest level whose rate fits the vehicle's fair share of its pool; lowest level as a floor.
pub fn rate_matched_level(snap: &ChannelSnapshot<f64>, pool: Node, v: VehicleId, sharing: usize, catalog: &VideoCatalog) -> Level {
    let m = snap.pool_size(pool);
    let share = snap.link_rate(pool, v, 0..m) / sharing.max(1) as f64;
    let mut level = 0;
    for (j, l) in catalog.levels.iter().enumerate() {
        if l.rate <= share {
            level = j;
        }
    }
    Some(level)
}

/// Edge vehicles (along-road distance to their RSU of at least `(1 − edge_fraction)/2`
/// of the inter-RSU span) relayed by the nearest mid-cell vehicle within `relay_radius`.
pub fn baseline2_partition(vehicles: &[VehicleState<f64>], rsus: &[RsuSite<f64>], cfg: &ScenarioConfig) -> SlicePartition {
    let len = cfg.highway_length;
    let serving: Vec<usize> = vehicles.iter().map(|v| nearest_rsu(v.pos, rsus, len)).collect();
    let limit = (1.0 - cfg.edge_fraction) / 2.0 * cfg.inter_rsu_distance;
    let edge: BTreeSet<VehicleId> = vehicles
        .iter()
        .filter(|v| ring_dx(rsus[serving[v.id]].pos.x, v.pos.x, len).abs() >= limit)
        .map(|v| v.id)
        .collect();

    let mut p = SlicePartition::default();
    for &e in &edge {
        let relay = vehicles
            .iter()
            .filter(|c| !edge.contains(&c.id))
            .map(|c| (ring_distance(vehicles[e].pos, c.pos, len), c.id))
            .filter(|(d, _)| *d <= cfg.relay_radius)
            .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)));
        if let Some((_, s)) = relay {
            p.leaders.insert(s);
            p.free.entry(s).or_default().insert(e);
            p.links.insert(e, vec![Node::Sl(s)]);
        }
    }
    for v in vehicles {
        if !p.links.contains_key(&v.id) {
            p.links.insert(v.id, vec![Node::Rsu(serving[v.id])]);
            if !p.leaders.contains(&v.id) {
                p.compelled.insert(v.id);
            }
        }
    }
    debug_assert!(check_partition(&p, &vehicles.iter().map(|v| v.id).collect()).is_ok());
    p
}
