//! Independent per-slot feasibility check.
//!
//! Covers the partition constraints, the cumulative quality prefix, the
//! backhaul constraint, pool separation and RB exclusivity. The playback
//! constraint is probabilistic and is evaluated over a whole run instead.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{check_partition, level_of, Node, SlicePartition, SlotDecision, VehicleId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintViolation {
    pub constraint: &'static str,
    pub detail: String,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.constraint, self.detail)
    }
}

/// Pool dimensions needed by the checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSizes {
    pub m_rsu: usize,
    pub m_sl: usize,
    pub levels: usize,
}

/// Relative slack allowed on the backhaul inequality for rounding.
pub const BACKHAUL_TOL: f64 = 1e-9;

pub fn check_decision(
    d: &SlotDecision,
    p: &SlicePartition,
    all: &BTreeSet<VehicleId>,
    sizes: PoolSizes,
) -> Result<(), Vec<ConstraintViolation>> {
    let mut out = Vec::new();
    let mut fail = |constraint: &'static str, detail: String| out.push(ConstraintViolation { constraint, detail });

    if let Err(e) = check_partition(p, all) {
        for v in e.0 {
            fail("partition", v.to_string());
        }
    }

    for v in all {
        match d.quality.get(v) {
            None => fail("quality_prefix", format!("vehicle {v} has no quality indicator")),
            Some(z) if z.len() != sizes.levels => fail("quality_prefix", format!("vehicle {v} indicator has {} levels", z.len())),
            Some(z) if level_of(z).is_none() => fail("quality_prefix", format!("vehicle {v} indicator {z:?} is not a prefix")),
            _ => {}
        }
    }

    for (&s, members) in &p.free {
        let r_bs = d.backhaul_rate.get(&s).copied().unwrap_or(0.0);
        let own = d.leader_demand.get(&s).copied().unwrap_or(0.0);
        let relayed: f64 = members.iter().map(|f| d.relay_rate.get(f).copied().unwrap_or(0.0)).sum();
        let budget = (r_bs - own).max(0.0);
        if relayed > budget + BACKHAUL_TOL * r_bs.max(1.0) {
            fail("backhaul", format!("leader {s} relays {relayed} with budget {budget}"));
        }
    }

    let mut pools: BTreeMap<VehicleId, BTreeSet<Node>> = BTreeMap::new();
    let mut used = BTreeSet::new();
    for g in &d.grants {
        pools.entry(g.vehicle).or_default().insert(g.pool);
        let size = match g.pool {
            Node::Rsu(_) => sizes.m_rsu,
            Node::Sl(_) => sizes.m_sl,
        };
        if g.rb >= size {
            fail("pool", format!("RB {} outside pool {}", g.rb, g.pool));
        }
        if p.serving(g.vehicle) != Some(g.pool) {
            fail("pool", format!("vehicle {} granted RB from {} which does not serve it", g.vehicle, g.pool));
        }
        if !used.insert((g.pool, g.rb)) {
            fail("rb_exclusive", format!("RB {} of {} granted twice", g.rb, g.pool));
        }
    }
    for (v, ps) in pools {
        let rsu = ps.iter().any(|n| matches!(n, Node::Rsu(_)));
        let sl = ps.iter().any(|n| matches!(n, Node::Sl(_)));
        if rsu && sl || ps.len() > 1 {
            fail("single_pool", format!("vehicle {v} holds RBs from {} pools", ps.len()));
        }
    }

    if out.is_empty() { Ok(()) } else { Err(out) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{prefix, RbGrant};

    fn setup() -> (SlotDecision, SlicePartition, BTreeSet<VehicleId>, PoolSizes) {
        let p = SlicePartition {
            leaders: [0].into(),
            free: [(0, [1].into())].into(),
            compelled: [2].into(),
            links: [(0, vec![Node::Rsu(0)]), (1, vec![Node::Sl(0)]), (2, vec![Node::Rsu(0)])].into(),
        };
        let d = SlotDecision {
            grants: vec![
                RbGrant { pool: Node::Rsu(0), rb: 0, vehicle: 0 },
                RbGrant { pool: Node::Rsu(0), rb: 1, vehicle: 2 },
                RbGrant { pool: Node::Sl(0), rb: 0, vehicle: 1 },
            ],
            quality: (0..3).map(|v| (v, prefix(Some(1), 3))).collect(),
            backhaul_rate: [(0, 10.0)].into(),
            leader_demand: [(0, 2.0)].into(),
            relay_rate: [(1, 5.0)].into(),
        };
        (d, p, [0, 1, 2].into(), PoolSizes { m_rsu: 2, m_sl: 2, levels: 3 })
    }

    #[test]
    fn feasible_decision_passes() {
        let (d, p, all, s) = setup();
        check_decision(&d, &p, &all, s).unwrap();
    }

    #[test]
    fn each_constraint_detected() {
        let (d0, p, all, s) = setup();
        let eq = |d: &SlotDecision| check_decision(d, &p, &all, s).unwrap_err()[0].constraint;

        let mut d = d0.clone();
        d.quality.insert(1, vec![true, false, true]);
        assert_eq!(eq(&d), "quality_prefix");

        let mut d = d0.clone();
        d.relay_rate.insert(1, 9.0);
        assert_eq!(eq(&d), "backhaul");

        let mut d = d0.clone();
        d.grants.push(RbGrant { pool: Node::Rsu(0), rb: 1, vehicle: 0 });
        assert_eq!(eq(&d), "rb_exclusive");

        let mut d = d0.clone();
        d.grants.push(RbGrant { pool: Node::Sl(0), rb: 1, vehicle: 2 });
        let errs = check_decision(&d, &p, &all, s).unwrap_err();
        assert!(errs.iter().any(|e| e.constraint == "single_pool"));
    }
}
