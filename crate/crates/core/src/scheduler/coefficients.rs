use std::collections::BTreeMap;

use crate::channel::ChannelSnapshot;
use crate::model::{Level, Node, ScenarioConfig, SlicePartition, VehicleId, VideoCatalog};
use crate::queueing::{QueueState, VirtualKind};
use crate::scalar::Real;

use super::qoe::level_weights;

/// Drift-plus-penalty coefficients of one RB pool.
///
/// The per-slot objective is
/// `Σ x_v^m ϑ_v^m + Σ z_v^j Φ_v^j − Σ x_v^m z_v^j ζ_v^{mj}`,
/// minimized over one owner per RB and one cumulative quality prefix per vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct DppCoefficients<T> {
    pub pool: Node,
    /// Local index → vehicle id.
    pub vehicles: Vec<VehicleId>,
    pub num_rbs: usize,
    pub levels: usize,
    pub theta: Vec<T>,
    pub phi: Vec<T>,
    pub zeta: Vec<T>,
    /// When set, quality is fixed per local vehicle and only RBs are chosen.
    pub frozen: Option<Vec<Level>>,
}

impl<T: Real> DppCoefficients<T> {
    pub fn zeros(pool: Node, vehicles: Vec<VehicleId>, num_rbs: usize, levels: usize) -> Self {
        let n = vehicles.len();
        Self {
            pool,
            vehicles,
            num_rbs,
            levels,
            theta: vec![T::zero(); n * num_rbs],
            phi: vec![T::zero(); n * levels],
            zeta: vec![T::zero(); n * num_rbs * levels],
            frozen: None,
        }
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    #[inline]
    pub fn theta(&self, v: usize, m: usize) -> T {
        self.theta[v * self.num_rbs + m]
    }

    #[inline]
    pub fn phi(&self, v: usize, j: usize) -> T {
        self.phi[v * self.levels + j]
    }

    #[inline]
    pub fn zeta(&self, v: usize, m: usize, j: usize) -> T {
        self.zeta[(v * self.num_rbs + m) * self.levels + j]
    }

    pub fn set_theta(&mut self, v: usize, m: usize, x: T) {
        self.theta[v * self.num_rbs + m] = x;
    }

    pub fn set_phi(&mut self, v: usize, j: usize, x: T) {
        self.phi[v * self.levels + j] = x;
    }

    pub fn set_zeta(&mut self, v: usize, m: usize, j: usize, x: T) {
        let i = (v * self.num_rbs + m) * self.levels + j;
        self.zeta[i] = x;
    }
}

/// Queue pressure `B_v` in bits.
///
/// Leaders and compelled vehicles: `U + q_b − ε q_b(0)`.
/// Free vehicles: `Y + q_b + q_s − ε (q_b(0) + q_s(0))`.
pub fn queue_pressure<T: Real>(q: &QueueState<T>, v: VehicleId, epsilon: T) -> T {
    match q.kind[v] {
        VirtualKind::Y => q.virt[v] + q.q_b[v] + q.q_s[v] - epsilon * (q.q_b0[v] + q.q_s0[v]),
        VirtualKind::U => q.virt[v] + q.q_b[v] - epsilon * q.q_b0[v],
    }
}

/// First-hop pressure a leader's V2I RBs carry for its free vehicles:
/// `Σ_f (Y_f + q_bf − ε q_bf(0))⁺`, zero for everyone else.
///
/// It weighs the leader's RB claim only. The leader's own quality drives
/// arrivals into its own queue, so its quality term uses [`queue_pressure`].
pub fn relay_pressure<T: Real>(q: &QueueState<T>, partition: &SlicePartition, v: VehicleId, epsilon: T) -> T {
    partition.free.get(&v).map_or(T::zero(), |f| {
        f.iter().map(|&u| (q.virt[u] + q.q_b[u] - epsilon * q.q_b0[u]).pos()).fold(T::zero(), |a, b| a + b)
    })
}

/// Coefficients for the vehicles served by `pool`. Rates are in bits per
/// second, queues in bits and `Ψ` in seconds.
#[allow(clippy::too_many_arguments)]
pub fn pool_coefficients<T: Real>(
    pool: Node,
    vehicles: Vec<VehicleId>,
    queues: &QueueState<T>,
    snap: &ChannelSnapshot<T>,
    partition: &SlicePartition,
    catalog: &VideoCatalog,
    cfg: &ScenarioConfig,
) -> DppCoefficients<T> {
    let m_pool = snap.pool_size(pool);
    let levels = catalog.len();
    let eps = T::lit(cfg.epsilon);
    let growth = T::one() + eps * T::lit(cfg.playback_threshold);
    let eta = T::lit(cfg.eta);
    let w: Vec<T> = level_weights(cfg, levels).into_iter().map(T::lit).collect();
    let dr: Vec<T> = catalog.increments().into_iter().map(T::lit).collect();

    let mut c = DppCoefficients::zeros(pool, vehicles, m_pool, levels);
    for (i, &v) in c.vehicles.clone().iter().enumerate() {
        let b = queue_pressure(queues, v, eps);
        let claim = b + relay_pressure(queues, partition, v, eps);
        for m in 0..m_pool {
            let rate = snap.rb_rate(pool, v, m);
            c.set_theta(i, m, -rate * claim);
            for j in 0..levels {
                c.set_zeta(i, m, j, rate * dr[j] * growth);
            }
        }
        for j in 0..levels {
            c.set_phi(i, j, -eta * w[j] * queues.z_av[v][j] + dr[j] * growth * b);
        }
    }
    c
}

/// Vehicles whose traffic uses each pool: RSU pools hold leaders and
/// compelled vehicles, SL pools hold the leader's free vehicles.
pub fn pool_members(partition: &SlicePartition) -> BTreeMap<Node, Vec<VehicleId>> {
    let mut pools: BTreeMap<Node, Vec<VehicleId>> = BTreeMap::new();
    for (&v, links) in &partition.links {
        if let [n] = links.as_slice() {
            pools.entry(*n).or_default().push(v);
        }
    }
    pools
}

/// Coefficients for every pool, with quality frozen when `frozen` is given.
pub fn compute_coefficients<T: Real>(
    queues: &QueueState<T>,
    snap: &ChannelSnapshot<T>,
    partition: &SlicePartition,
    catalog: &VideoCatalog,
    cfg: &ScenarioConfig,
    frozen: Option<&[Level]>,
) -> Vec<DppCoefficients<T>> {
    pool_members(partition)
        .into_iter()
        .map(|(pool, vs)| {
            let mut c = pool_coefficients(pool, vs, queues, snap, partition, catalog, cfg);
            if let Some(levels) = frozen {
                c.frozen = Some(c.vehicles.iter().map(|&v| levels[v]).collect());
            }
            c
        })
        .collect()
}
