//! Per-slot channel state: log-distance path loss with Rayleigh fading,
//! interference from the previous slot's RB usage, SINR and Shannon rates.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::Exp1;

use crate::mobility::{ring_distance, RsuSite, VehicleState};
use crate::model::{Node, RsuId, ScenarioConfig, SlicePartition, SlotDecision, VehicleId};
use crate::scalar::Real;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `gain(d) = K · max(d, 1)^−n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss<T> {
    pub intercept: T,
    pub exponent: T,
}

impl<T: Real> PathLoss<T> {
    /// Free-space intercept at 1 m for the given carrier.
    pub fn free_space(carrier_hz: f64, exponent: f64) -> Self {
        let k = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * carrier_hz)).powi(2);
        Self { intercept: T::lit(k), exponent: T::lit(exponent) }
    }

    pub fn gain(&self, d: T) -> T {
        self.intercept * d.max(T::one()).powf(-self.exponent)
    }
}

/// RBs in use per transmitter during a slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivityMap {
    pub rsu: Vec<Vec<bool>>,
    pub sl: BTreeMap<VehicleId, Vec<bool>>,
}

impl ActivityMap {
    pub fn idle(num_rsus: usize, m_rsu: usize) -> Self {
        Self { rsu: vec![vec![false; m_rsu]; num_rsus], sl: BTreeMap::new() }
    }

    pub fn from_decision(d: &SlotDecision, num_rsus: usize, m_rsu: usize, m_sl: usize) -> Self {
        let mut a = Self::idle(num_rsus, m_rsu);
        for g in &d.grants {
            match g.pool {
                Node::Rsu(b) => a.rsu[b][g.rb] = true,
                Node::Sl(s) => a.sl.entry(s).or_insert_with(|| vec![false; m_sl])[g.rb] = true,
            }
        }
        a
    }

    pub fn active(&self, tx: Node, m: usize) -> bool {
        match tx {
            Node::Rsu(b) => self.rsu.get(b).and_then(|r| r.get(m)).copied().unwrap_or(false),
            Node::Sl(s) => self.sl.get(&s).and_then(|r| r.get(m)).copied().unwrap_or(false),
        }
    }
}

/// Gains, powers and interference for every potential link in one slot.
///
/// V2I entries cover every (RSU, vehicle, RB). V2V entries cover every
/// (slice leader, free vehicle, RB) so co-channel leaders can be summed.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot<T> {
    pub noise: T,
    pub bandwidth: T,
    pub num_rsus: usize,
    pub num_vehicles: usize,
    pub m_rsu: usize,
    pub m_sl: usize,
    /// Transmit power per RB.
    pub rsu_power: T,
    pub sl_power: T,
    pub leaders: Vec<VehicleId>,
    pub receivers: Vec<VehicleId>,
    v2i_gain: Vec<T>,
    v2i_interference: Vec<T>,
    v2v_gain: Vec<T>,
    v2v_interference: Vec<T>,
    /// Vehicle id → position in `leaders` / `receivers`.
    leader_idx: Vec<Option<usize>>,
    receiver_idx: Vec<Option<usize>>,
}

impl<T: Real> ChannelSnapshot<T> {
    /// Builds a snapshot from explicit V2I gains laid out `[b][v][m]`; used by tests and small instances.
    pub fn from_v2i_gains(
        gains: Vec<T>,
        num_rsus: usize,
        num_vehicles: usize,
        m_rsu: usize,
        rsu_power: T,
        noise: T,
        bandwidth: T,
    ) -> Self {
        assert_eq!(gains.len(), num_rsus * num_vehicles * m_rsu);
        Self {
            noise,
            bandwidth,
            num_rsus,
            num_vehicles,
            m_rsu,
            m_sl: 0,
            rsu_power,
            sl_power: T::zero(),
            leaders: Vec::new(),
            receivers: Vec::new(),
            v2i_interference: vec![T::zero(); gains.len()],
            v2i_gain: gains,
            v2v_gain: Vec::new(),
            v2v_interference: Vec::new(),
            leader_idx: Vec::new(),
            receiver_idx: Vec::new(),
        }
    }

    /// Adds V2V gains laid out `[s][f][m]` for the given leaders and receivers.
    pub fn with_v2v_gains(
        mut self,
        leaders: Vec<VehicleId>,
        receivers: Vec<VehicleId>,
        gains: Vec<T>,
        m_sl: usize,
        sl_power: T,
    ) -> Self {
        assert_eq!(gains.len(), leaders.len() * receivers.len() * m_sl);
        let index = |ids: &[VehicleId]| {
            let mut idx = vec![None; ids.iter().max().map_or(0, |&m| m + 1)];
            for (i, &v) in ids.iter().enumerate() {
                idx[v] = Some(i);
            }
            idx
        };
        self.leader_idx = index(&leaders);
        self.receiver_idx = index(&receivers);
        self.leaders = leaders;
        self.receivers = receivers;
        self.m_sl = m_sl;
        self.sl_power = sl_power;
        self.v2v_interference = vec![T::zero(); gains.len()];
        self.v2v_gain = gains;
        self
    }

    fn v2i_at(&self, b: RsuId, v: VehicleId, m: usize) -> usize {
        (b * self.num_vehicles + v) * self.m_rsu + m
    }

    fn v2v_at(&self, s: VehicleId, f: VehicleId, m: usize) -> Option<usize> {
        let si = (*self.leader_idx.get(s)?)?;
        let fi = (*self.receiver_idx.get(f)?)?;
        Some((si * self.receivers.len() + fi) * self.m_sl + m)
    }

    pub fn pool_size(&self, tx: Node) -> usize {
        match tx {
            Node::Rsu(_) => self.m_rsu,
            Node::Sl(_) => self.m_sl,
        }
    }

    pub fn gain(&self, tx: Node, v: VehicleId, m: usize) -> Option<T> {
        match tx {
            Node::Rsu(b) if b < self.num_rsus && v < self.num_vehicles && m < self.m_rsu => {
                Some(self.v2i_gain[self.v2i_at(b, v, m)])
            }
            Node::Sl(s) if m < self.m_sl => self.v2v_at(s, v, m).map(|i| self.v2v_gain[i]),
            _ => None,
        }
    }

    pub fn power(&self, tx: Node) -> T {
        match tx {
            Node::Rsu(_) => self.rsu_power,
            Node::Sl(_) => self.sl_power,
        }
    }

    pub fn interference(&self, tx: Node, v: VehicleId, m: usize) -> Option<T> {
        match tx {
            Node::Rsu(b) if b < self.num_rsus && v < self.num_vehicles && m < self.m_rsu => {
                Some(self.v2i_interference[self.v2i_at(b, v, m)])
            }
            Node::Sl(s) if m < self.m_sl => self.v2v_at(s, v, m).map(|i| self.v2v_interference[i]),
            _ => None,
        }
    }

    /// Sets interference from an activity map: the received power of every
    /// other transmitter of the same pool that is active on the RB.
    pub fn recompute_interference(&mut self, activity: &ActivityMap) {
        let rsu_on: Vec<Vec<usize>> =
            (0..self.m_rsu).map(|m| (0..self.num_rsus).filter(|&b| activity.active(Node::Rsu(b), m)).collect()).collect();
        for b in 0..self.num_rsus {
            for v in 0..self.num_vehicles {
                for (m, on) in rsu_on.iter().enumerate() {
                    let mut i = T::zero();
                    for &b2 in on {
                        if b2 != b {
                            i += self.rsu_power * self.v2i_gain[self.v2i_at(b2, v, m)];
                        }
                    }
                    let at = self.v2i_at(b, v, m);
                    self.v2i_interference[at] = i;
                }
            }
        }
        let nf = self.receivers.len();
        let sl_on: Vec<Vec<usize>> = (0..self.m_sl)
            .map(|m| (0..self.leaders.len()).filter(|&si| activity.active(Node::Sl(self.leaders[si]), m)).collect())
            .collect();
        for si in 0..self.leaders.len() {
            for fi in 0..nf {
                for (m, on) in sl_on.iter().enumerate() {
                    let mut i = T::zero();
                    for &s2i in on {
                        if s2i != si {
                            i += self.sl_power * self.v2v_gain[(s2i * nf + fi) * self.m_sl + m];
                        }
                    }
                    self.v2v_interference[(si * nf + fi) * self.m_sl + m] = i;
                }
            }
        }
    }

    /// `p|h|² / (σ² + I)`; zero for links absent from the snapshot.
    pub fn sinr(&self, tx: Node, v: VehicleId, m: usize) -> T {
        match (self.gain(tx, v, m), self.interference(tx, v, m)) {
            (Some(g), Some(i)) => self.power(tx) * g / (self.noise + i),
            _ => T::zero(),
        }
    }

    /// `φ·log2(1 + SINR)` on one RB, bits/second.
    pub fn rb_rate(&self, tx: Node, v: VehicleId, m: usize) -> T {
        self.bandwidth * (T::one() + self.sinr(tx, v, m)).log2()
    }

    /// Sum of per-RB rates over `rbs`.
    pub fn link_rate(&self, tx: Node, v: VehicleId, rbs: impl IntoIterator<Item = usize>) -> T {
        rbs.into_iter().map(|m| self.rb_rate(tx, v, m)).fold(T::zero(), |a, b| a + b)
    }

    /// Mean SINR over the pool, linear.
    pub fn wideband_sinr(&self, tx: Node, v: VehicleId) -> T {
        let m = self.pool_size(tx);
        if m == 0 {
            return T::zero();
        }
        (0..m).map(|k| self.sinr(tx, v, k)).fold(T::zero(), |a, b| a + b) / T::lit(m as f64)
    }
}

/// Samples a snapshot for the current geometry.
///
/// V2I fading is drawn from `rng_v2i` in a fixed order whose length does not
/// depend on the partition; V2V fading comes from its own stream.
#[allow(clippy::too_many_arguments)]
pub fn sample_channel<T: Real, R1: Rng + ?Sized, R2: Rng + ?Sized>(
    vehicles: &[VehicleState<T>],
    rsus: &[RsuSite<T>],
    partition: &SlicePartition,
    cfg: &ScenarioConfig,
    activity: &ActivityMap,
    rng_v2i: &mut R1,
    rng_v2v: &mut R2,
) -> ChannelSnapshot<T> {
    let len = T::lit(cfg.highway_length);
    let fade = |r: &mut dyn FnMut() -> f64| if cfg.fading { T::lit(r()) } else { T::one() };

    let v2i = PathLoss::<T>::free_space(cfg.carrier_v2i, cfg.pathloss_exponent_v2i);
    let (nb, nv, m_rsu) = (rsus.len(), vehicles.len(), cfg.num_rbs_rsu);
    let mut gains = Vec::with_capacity(nb * nv * m_rsu);
    let mut draw1 = || rng_v2i.sample::<f64, _>(Exp1);
    for r in rsus {
        for v in vehicles {
            let pl = v2i.gain(ring_distance(r.pos, v.pos, len));
            for _ in 0..m_rsu {
                gains.push(pl * fade(&mut draw1));
            }
        }
    }
    let snap = ChannelSnapshot::from_v2i_gains(
        gains,
        nb,
        nv,
        m_rsu,
        T::lit(cfg.rsu_tx_power / m_rsu as f64),
        T::lit(cfg.noise_power),
        T::lit(cfg.rb_bandwidth),
    );

    let v2v = PathLoss::<T>::free_space(cfg.carrier_v2v, cfg.pathloss_exponent_v2v);
    let leaders: Vec<VehicleId> = partition.leaders.iter().copied().collect();
    let receivers: Vec<VehicleId> = partition.free.values().flatten().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let m_sl = cfg.num_rbs_sl;
    let mut g2 = Vec::with_capacity(leaders.len() * receivers.len() * m_sl);
    let mut draw2 = || rng_v2v.sample::<f64, _>(Exp1);
    for &s in &leaders {
        for &f in &receivers {
            let pl = v2v.gain(ring_distance(vehicles[s].pos, vehicles[f].pos, len));
            for _ in 0..m_sl {
                g2.push(pl * fade(&mut draw2));
            }
        }
    }
    let mut snap = snap.with_v2v_gains(leaders, receivers, g2, m_sl, T::lit(cfg.sl_tx_power / m_sl as f64));
    snap.recompute_interference(activity);
    snap
}
