use std::collections::{BTreeMap, BTreeSet};

use crate::mobility::{ring_distance, ring_dx, Point};
use crate::model::VehicleId;
use crate::scalar::Real;

/// Mean member position; x is unwrapped around the first member when `ring` is set.
pub fn centroid<T: Real>(members: &[VehicleId], positions: &[Point<T>], ring: Option<T>) -> Point<T> {
    let anchor = positions[members[0]];
    let n = T::lit(members.len() as f64);
    let (mut sx, mut sy) = (T::zero(), T::zero());
    for &m in members {
        let p = positions[m];
        sx += match ring {
            Some(len) => anchor.x + ring_dx(anchor.x, p.x, len),
            None => p.x,
        };
        sy += p.y;
    }
    let mut x = sx / n;
    if let Some(len) = ring {
        x = crate::mobility::wrap(x, len);
    }
    Point::new(x, sy / n)
}

/// Outcome of leader election.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Election {
    /// Cluster index → leader.
    pub leaders: BTreeMap<usize, VehicleId>,
    /// Clusters left without a leader because candidates ran out.
    pub dissolved: Vec<usize>,
}

/// Picks for each cluster the nearest non-free vehicle to its centroid.
///
/// All (cluster, candidate) pairs are visited by ascending distance, then
/// cluster index, then vehicle id; a pair is accepted when both sides are
/// still unmatched, so each vehicle leads at most one cluster.
pub fn elect_leaders<T: Real>(
    clusters: &[Vec<VehicleId>],
    positions: &[Point<T>],
    free: &BTreeSet<VehicleId>,
    ring: Option<T>,
) -> Election {
    let candidates: Vec<VehicleId> = (0..positions.len()).filter(|v| !free.contains(v)).collect();
    let mut pairs = Vec::with_capacity(clusters.len() * candidates.len());
    for (c, members) in clusters.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let y = centroid(members, positions, ring);
        for &v in &candidates {
            let d = match ring {
                Some(len) => ring_distance(y, positions[v], len),
                None => (positions[v].x - y.x).hypot(positions[v].y - y.y),
            };
            pairs.push((d, c, v));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut out = Election::default();
    let mut used = BTreeSet::new();
    for (_, c, v) in pairs {
        if out.leaders.contains_key(&c) || used.contains(&v) {
            continue;
        }
        out.leaders.insert(c, v);
        used.insert(v);
    }
    out.dissolved = (0..clusters.len())
        .filter(|c| !clusters[*c].is_empty() && !out.leaders.contains_key(c))
        .collect();
    if !out.dissolved.is_empty() {
        tracing::warn!(dissolved = out.dissolved.len(), "not enough leader candidates");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Point<f64>> {
        xs.iter().map(|&x| Point::new(x, 0.0)).collect()
    }

    #[test]
    fn nearest_candidate_wins() {
        // Cluster {0,1} centred at 500; candidates at 490 and 600.
        let pos = line(&[495.0, 505.0, 490.0, 600.0]);
        let e = elect_leaders(&[vec![0, 1]], &pos, &[0, 1].into(), None);
        assert_eq!(e.leaders[&0], 2);
    }

    #[test]
    fn empty_free_set_gives_empty_map() {
        let e = elect_leaders::<f64>(&[], &line(&[0.0, 1.0]), &BTreeSet::new(), None);
        assert!(e.leaders.is_empty() && e.dissolved.is_empty());
    }

    #[test]
    fn shortage_dissolves() {
        let pos = line(&[0.0, 10.0, 5.0]);
        let e = elect_leaders(&[vec![0], vec![1]], &pos, &[0, 1].into(), None);
        assert_eq!(e.leaders.len(), 1);
        assert_eq!(e.dissolved.len(), 1);
    }

    #[test]
    fn centroid_unwraps_ring() {
        let pos = line(&[998.0, 4.0]);
        let c = centroid(&[0, 1], &pos, Some(1000.0));
        assert!((c.x - 1.0).abs() < 1e-12);
    }
}
