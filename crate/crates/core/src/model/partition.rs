//! The (S, F, C) vehicle partition and its checker.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VehicleId = usize;
pub type RsuId = usize;

/// A serving node: an RSU or a slice leader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Rsu(RsuId),
    Sl(VehicleId),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Rsu(b) => write!(f, "rsu{b}"),
            Node::Sl(s) => write!(f, "sl{s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Leader,
    Free,
    Compelled,
}

impl Role {
    pub fn tag(self) -> &'static str {
        match self {
            Role::Leader => "SL",
            Role::Free => "FREE",
            Role::Compelled => "COMPELLED",
        }
    }
}

/// Vehicle partition with link indicators.
///
/// `links[v]` lists every node whose indicator `l_nv` is set for `v`; a
/// well-formed partition has exactly one entry per vehicle.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlicePartition {
    pub leaders: BTreeSet<VehicleId>,
    pub free: BTreeMap<VehicleId, BTreeSet<VehicleId>>,
    pub compelled: BTreeSet<VehicleId>,
    pub links: BTreeMap<VehicleId, Vec<Node>>,
}

impl SlicePartition {
    /// Every vehicle compelled and served by the given RSU.
    pub fn all_compelled(serving: &BTreeMap<VehicleId, RsuId>) -> Self {
        Self {
            leaders: BTreeSet::new(),
            free: BTreeMap::new(),
            compelled: serving.keys().copied().collect(),
            links: serving.iter().map(|(&v, &b)| (v, vec![Node::Rsu(b)])).collect(),
        }
    }

    pub fn role(&self, v: VehicleId) -> Option<Role> {
        if self.leaders.contains(&v) {
            Some(Role::Leader)
        } else if self.compelled.contains(&v) {
            Some(Role::Compelled)
        } else if self.free.values().any(|f| f.contains(&v)) {
            Some(Role::Free)
        } else {
            None
        }
    }

    /// The single serving node, if the link indicators are well formed.
    pub fn serving(&self, v: VehicleId) -> Option<Node> {
        match self.links.get(&v).map(Vec::as_slice) {
            Some([n]) => Some(*n),
            _ => None,
        }
    }

    pub fn is_free(&self, v: VehicleId) -> bool {
        matches!(self.serving(v), Some(Node::Sl(_)))
    }

    /// Leader serving free vehicle `v`.
    pub fn leader_of(&self, v: VehicleId) -> Option<VehicleId> {
        self.free.iter().find(|(_, f)| f.contains(&v)).map(|(&s, _)| s)
    }

    /// RSU carrying `v`'s traffic, directly or through its leader.
    pub fn rsu_of(&self, v: VehicleId) -> Option<RsuId> {
        match self.serving(v)? {
            Node::Rsu(b) => Some(b),
            Node::Sl(s) => match self.serving(s)? {
                Node::Rsu(b) => Some(b),
                Node::Sl(_) => None,
            },
        }
    }

    pub fn num_free(&self) -> usize {
        self.free.values().map(BTreeSet::len).sum()
    }

    pub fn num_clusters(&self) -> usize {
        self.free.values().filter(|f| !f.is_empty()).count()
    }
}

/// Which partition constraint failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionViolation {
    pub constraint: &'static str,
    pub detail: String,
}

impl fmt::Display for PartitionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.constraint, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("partition invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct PartitionErrors(pub Vec<PartitionViolation>);

impl PartitionErrors {
    pub fn has(&self, constraint: &str) -> bool {
        self.0.iter().any(|v| v.constraint == constraint)
    }
}

/// Verifies the set-partition and link-indicator constraints against `all`.
pub fn check_partition(p: &SlicePartition, all: &BTreeSet<VehicleId>) -> Result<(), PartitionErrors> {
    let mut out = Vec::new();
    let mut fail = |constraint: &'static str, detail: String| out.push(PartitionViolation { constraint, detail });

    // S, F and C partition V.
    let free_all: Vec<VehicleId> = p.free.values().flatten().copied().collect();
    let free_set: BTreeSet<VehicleId> = free_all.iter().copied().collect();
    for v in p.leaders.intersection(&p.compelled) {
        fail("cover", format!("sets overlap: vehicle {v} in S and C"));
    }
    for v in free_set.intersection(&p.compelled) {
        fail("cover", format!("sets overlap: vehicle {v} in F and C"));
    }
    for v in free_set.intersection(&p.leaders) {
        fail("cover", format!("sets overlap: vehicle {v} in S and F"));
    }
    let union: BTreeSet<VehicleId> =
        p.leaders.iter().chain(free_set.iter()).chain(p.compelled.iter()).copied().collect();
    if &union != all {
        let missing: Vec<_> = all.difference(&union).collect();
        let extra: Vec<_> = union.difference(all).collect();
        fail("cover", format!("union differs from V (missing {missing:?}, unknown {extra:?})"));
    }
    if p.leaders.len() + free_set.len() + p.compelled.len() != all.len() {
        fail("cover", "cardinality |S|+|F|+|C| differs from |V|".into());
    }

    // Each leader and compelled vehicle sits in at most one RSU's set.
    for (set, eq, name) in [(&p.leaders, "leader_rsu", "leader"), (&p.compelled, "compelled_rsu", "compelled vehicle")] {
        for v in set {
            let rsus = p.links.get(v).map_or(0, |l| l.iter().filter(|n| matches!(n, Node::Rsu(_))).count());
            if rsus > 1 {
                fail(eq, format!("{name} {v} in {rsus} RSU sets"));
            }
        }
    }

    // Free sets are disjoint and keyed by leaders.
    if free_all.len() != free_set.len() {
        fail("free_sets", "free sets of different leaders overlap".into());
    }
    for s in p.free.keys() {
        if !p.leaders.contains(s) {
            fail("free_sets", format!("free set keyed by non-leader {s}"));
        }
    }

    // Exactly one link per vehicle, consistent with its role.
    for v in all {
        let links = p.links.get(v).map(Vec::as_slice).unwrap_or(&[]);
        if links.len() != 1 {
            fail("links", format!("vehicle {v} has {} link indicators set", links.len()));
            continue;
        }
        let ok = match (links[0], p.role(*v)) {
            (Node::Rsu(_), Some(Role::Leader | Role::Compelled)) => true,
            (Node::Sl(s), Some(Role::Free)) => p.free.get(&s).is_some_and(|f| f.contains(v)),
            _ => false,
        };
        if !ok {
            fail("links", format!("vehicle {v} linked to {} inconsistent with its role", links[0]));
        }
    }
    for v in p.links.keys() {
        if !all.contains(v) {
            fail("links", format!("link indicator for unknown vehicle {v}"));
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(PartitionErrors(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> (SlicePartition, BTreeSet<VehicleId>) {
        let p = SlicePartition {
            leaders: [1].into(),
            free: [(1, [2, 3].into())].into(),
            compelled: [4].into(),
            links: [
                (1, vec![Node::Rsu(0)]),
                (2, vec![Node::Sl(1)]),
                (3, vec![Node::Sl(1)]),
                (4, vec![Node::Rsu(0)]),
            ]
            .into(),
        };
        (p, [1, 2, 3, 4].into())
    }

    #[test]
    fn disjoint_partition_ok() {
        let (p, v) = example();
        check_partition(&p, &v).unwrap();
        assert_eq!(p.rsu_of(3), Some(0));
        assert_eq!(p.leader_of(2), Some(1));
    }

    #[test]
    fn overlap_breaks_cover() {
        let (mut p, v) = example();
        p.compelled.insert(2);
        let e = check_partition(&p, &v).unwrap_err();
        assert!(e.has("cover"));
        assert!(e.to_string().contains("cover: sets overlap"));
    }

    #[test]
    fn free_vehicle_on_rsu_breaks_links() {
        let (mut p, v) = example();
        p.links.insert(2, vec![Node::Rsu(0)]);
        assert!(check_partition(&p, &v).unwrap_err().has("links"));
        p.links.insert(2, vec![Node::Rsu(0), Node::Sl(1)]);
        assert!(check_partition(&p, &v).unwrap_err().has("links"));
    }

    #[test]
    fn double_rsu_membership_detected() {
        let (mut p, v) = example();
        p.links.insert(1, vec![Node::Rsu(0), Node::Rsu(1)]);
        let e = check_partition(&p, &v).unwrap_err();
        assert!(e.has("leader_rsu"));
    }

    #[test]
    fn shared_free_vehicle_detected() {
        let (mut p, v) = example();
        p.leaders.insert(4);
        p.compelled.remove(&4);
        p.free.insert(4, [3].into());
        assert!(check_partition(&p, &v).unwrap_err().has("free_sets"));
    }
}
