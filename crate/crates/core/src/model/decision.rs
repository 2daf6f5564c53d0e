//! Per-slot scheduling decisions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::partition::{Node, VehicleId};

/// Chunk quality: `None` is idle, `Some(j)` selects level `j`.
pub type Level = Option<usize>;

/// Cumulative indicator vector `z` for a level.
pub fn prefix(level: Level, levels: usize) -> Vec<bool> {
    (0..levels).map(|j| level.is_some_and(|l| j <= l)).collect()
}

/// Level encoded by `z`, or `None` when `z` is not a cumulative prefix.
pub fn level_of(z: &[bool]) -> Option<Level> {
    let ones = z.iter().take_while(|&&b| b).count();
    if z[ones..].iter().any(|&b| b) {
        return None;
    }
    Some(ones.checked_sub(1))
}

/// One resource block granted to one vehicle from one pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RbGrant {
    pub pool: Node,
    pub rb: usize,
    pub vehicle: VehicleId,
}

/// Everything decided for one slot.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotDecision {
    /// Nonzero entries of `x`, sorted by pool then RB.
    pub grants: Vec<RbGrant>,
    /// `z` per vehicle for the current chunk.
    pub quality: BTreeMap<VehicleId, Vec<bool>>,
    /// V2I rate `r_bs` of each slice leader, bits/second.
    pub backhaul_rate: BTreeMap<VehicleId, f64>,
    /// Own demand `r_s^req` of each slice leader, bits/second.
    pub leader_demand: BTreeMap<VehicleId, f64>,
    /// V2V service rate `r_sf` of each free vehicle after backhaul enforcement, bits/second.
    pub relay_rate: BTreeMap<VehicleId, f64>,
}

impl SlotDecision {
    pub fn level(&self, v: VehicleId) -> Option<Level> {
        self.quality.get(&v).and_then(|z| level_of(z))
    }

    pub fn rbs_of(&self, v: VehicleId) -> impl Iterator<Item = &RbGrant> {
        self.grants.iter().filter(move |g| g.vehicle == v)
    }
}
