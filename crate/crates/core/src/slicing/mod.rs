//! Cluster formation for weak vehicles and slice-leader election.
//!
//! Each epoch the weak vehicles of every RSU are clustered spectrally: the
//! unnormalized Laplacian of their similarity graph is diagonalized, the
//! eigengap picks `k`, and k-means on the first `k` eigenvectors assigns
//! members. Each cluster then gets the nearest non-clustered vehicle as its
//! leader.

mod kmeans;
mod leaders;
mod similarity;
mod spectrum;

use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

pub use kmeans::kmeans;
pub use leaders::{centroid, elect_leaders, Election};
pub use similarity::{build_similarity, SimilarityMatrix};
pub use spectrum::{choose_k, symmetric_eigen, LaplacianSpectrum};

use crate::channel::ChannelSnapshot;
use crate::mobility::{nearest_rsu, Point, RsuSite, VehicleState};
use crate::model::{check_partition, Node, PartitionErrors, ScenarioConfig, SlicePartition, VehicleId};
use crate::scalar::{from_db, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlicingError {
    #[error("insufficient spectrum: {0} eigenvalues")]
    InsufficientSpectrum(usize),
    #[error("eigensolver did not converge, residual norm {residual:e}")]
    NoConvergence { residual: f64 },
    #[error(transparent)]
    Partition(#[from] PartitionErrors),
}

/// Vehicles whose best mean V2I SINR is below `threshold_db`.
pub fn weak_vehicle_set<T: Real>(snap: &ChannelSnapshot<T>, vehicles: &[VehicleState<T>], threshold_db: f64) -> BTreeSet<VehicleId> {
    if threshold_db == f64::NEG_INFINITY {
        return BTreeSet::new();
    }
    let thr = from_db(T::lit(threshold_db));
    vehicles
        .iter()
        .filter(|v| {
            let best = (0..snap.num_rsus)
                .map(|b| snap.wideband_sinr(Node::Rsu(b), v.id))
                .fold(T::zero(), |a, b| a.max(b));
            best < thr
        })
        .map(|v| v.id)
        .collect()
}

/// Spectral clustering of the candidates in `sim`; returns a partition of `sim.ids`.
///
/// Clusters are sorted by their smallest member, members ascending.
pub fn spectral_cluster<T: Real, R: Rng + ?Sized>(
    sim: &SimilarityMatrix<T>,
    floor: T,
    restarts: usize,
    rng: &mut R,
) -> Result<Vec<Vec<VehicleId>>, SlicingError> {
    let n = sim.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![sim.ids.clone()]);
    }
    let spec = symmetric_eigen(&sim.laplacian(floor), n)?;
    let k = choose_k(&spec.values)?;
    let rows: Vec<Vec<T>> = (0..n).map(|i| (0..k).map(|c| spec.vectors[c][i]).collect()).collect();
    let labels = kmeans(&rows, k, restarts, rng);
    let mut clusters = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        clusters[l].push(sim.ids[i]);
    }
    let mut clusters: Vec<Vec<VehicleId>> = clusters.into_iter().filter(|c| !c.is_empty()).collect();
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort();
    Ok(clusters)
}

/// Assembles (S, F, C): leaders and compelled vehicles attach to their nearest RSU.
pub fn make_partition<T: Real>(
    clusters: &[Vec<VehicleId>],
    election: &Election,
    vehicles: &[VehicleState<T>],
    rsus: &[RsuSite<T>],
    ring: T,
) -> Result<SlicePartition, SlicingError> {
    let mut p = SlicePartition::default();
    for (&c, &s) in &election.leaders {
        p.leaders.insert(s);
        p.free.insert(s, clusters[c].iter().copied().collect());
    }
    let free: BTreeSet<VehicleId> = p.free.values().flatten().copied().collect();
    for v in vehicles {
        if free.contains(&v.id) {
            let s = p.leader_of(v.id).expect("free vehicle has a leader");
            p.links.insert(v.id, vec![Node::Sl(s)]);
        } else {
            if !p.leaders.contains(&v.id) {
                p.compelled.insert(v.id);
            }
            p.links.insert(v.id, vec![Node::Rsu(nearest_rsu(v.pos, rsus, ring))]);
        }
    }
    let all: BTreeSet<VehicleId> = vehicles.iter().map(|v| v.id).collect();
    check_partition(&p, &all)?;
    Ok(p)
}

/// Result of one re-slicing epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicingOutcome {
    pub partition: SlicePartition,
    pub weak: BTreeSet<VehicleId>,
    pub clusters: Vec<Vec<VehicleId>>,
    pub dissolved: usize,
}

/// Weak set, network-wide clustering, leader election and partition for one epoch.
pub fn reslice<T: Real, R: Rng + ?Sized>(
    vehicles: &[VehicleState<T>],
    rsus: &[RsuSite<T>],
    snap: &ChannelSnapshot<T>,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<SlicingOutcome, SlicingError> {
    let ring = T::lit(cfg.highway_length);
    let weak = weak_vehicle_set(snap, vehicles, cfg.weak_sinr_threshold_db);
    let pts: Vec<(VehicleId, Point<T>)> = weak.iter().map(|&v| (v, vehicles[v].pos)).collect();
    let sim = build_similarity(&pts, T::lit(cfg.neighborhood_size), cfg.squared_kernel, Some(ring));
    let clusters = spectral_cluster(&sim, T::lit(cfg.similarity_floor), cfg.kmeans_restarts, rng)?;
    let positions: Vec<Point<T>> = vehicles.iter().map(|v| v.pos).collect();
    let election = elect_leaders(&clusters, &positions, &weak, Some(ring));
    let partition = make_partition(&clusters, &election, vehicles, rsus, ring)?;
    Ok(SlicingOutcome { partition, weak, dissolved: election.dissolved.len(), clusters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RandomSource;

    fn cloud(points: &[(f64, f64)]) -> Vec<(VehicleId, Point<f64>)> {
        points.iter().enumerate().map(|(i, &(x, y))| (i, Point::new(x, y))).collect()
    }

    #[test]
    fn two_clouds_recovered() {
        let pts = cloud(&[(0.0, 0.0), (3.0, 4.0), (5.0, 0.0), (1000.0, 0.0), (1004.0, 4.0), (1002.0, -4.0)]);
        let sim = build_similarity(&pts, 10.0, false, None);
        let c = spectral_cluster(&sim, 1e-6, 50, &mut RandomSource::new(1, 4).rng()).unwrap();
        assert_eq!(c, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn single_candidate() {
        let sim = build_similarity(&cloud(&[(7.0, 0.0)]), 10.0, false, None);
        assert_eq!(spectral_cluster(&sim, 1e-6, 5, &mut RandomSource::new(1, 4).rng()).unwrap(), vec![vec![0]]);
    }

    #[test]
    fn coincident_candidates_form_one_cluster() {
        let sim = build_similarity(&cloud(&[(1.0, 1.0); 5]), 10.0, false, None);
        assert_eq!(choose_k(&symmetric_eigen(&sim.laplacian(1e-6), 5).unwrap().values).unwrap(), 1);
        let c = spectral_cluster(&sim, 1e-6, 5, &mut RandomSource::new(1, 4).rng()).unwrap();
        assert_eq!(c, vec![vec![0, 1, 2, 3, 4]]);
    }

    fn vehicles(xs: &[f64]) -> Vec<VehicleState<f64>> {
        xs.iter()
            .enumerate()
            .map(|(i, &x)| VehicleState { id: i, pos: Point::new(x, 0.0), lane: 3, direction: 1, speed: 1.0 })
            .collect()
    }

    fn rsus() -> Vec<RsuSite<f64>> {
        vec![RsuSite { id: 0, pos: Point::new(250.0, 35.0) }, RsuSite { id: 1, pos: Point::new(750.0, -35.0) }]
    }

    #[test]
    fn partition_arithmetic() {
        let v = vehicles(&[10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0]);
        let clusters = vec![vec![0, 1, 2]];
        let pos: Vec<_> = v.iter().map(|s| s.pos).collect();
        let e = elect_leaders(&clusters, &pos, &[0, 1, 2].into(), Some(1000.0));
        let p = make_partition(&clusters, &e, &v, &rsus(), 1000.0).unwrap();
        assert_eq!((p.leaders.len(), p.num_free(), p.compelled.len()), (1, 3, 6));
        assert_eq!(p.leaders.iter().next(), Some(&3));
    }

    #[test]
    fn no_clusters_all_compelled() {
        let v = vehicles(&[10.0, 600.0]);
        let p = make_partition(&[], &Election::default(), &v, &rsus(), 1000.0).unwrap();
        assert!(p.leaders.is_empty() && p.free.is_empty());
        assert_eq!(p.compelled.len(), 2);
        assert_eq!(p.serving(1), Some(Node::Rsu(1)));
    }

    #[test]
    fn shortage_keeps_identity() {
        let v = vehicles(&[10.0, 20.0, 900.0]);
        let clusters = vec![vec![0], vec![1]];
        let pos: Vec<_> = v.iter().map(|s| s.pos).collect();
        let e = elect_leaders(&clusters, &pos, &[0, 1].into(), Some(1000.0));
        assert_eq!(e.dissolved.len(), 1);
        let p = make_partition(&clusters, &e, &v, &rsus(), 1000.0).unwrap();
        assert_eq!(p.leaders.len() + p.num_free() + p.compelled.len(), 3);
    }
}
