//! Actual and virtual queues, running averages, and playback/latency ledgers.

mod ledger;

pub use ledger::{reliability_estimate, LatencySample, PlaybackLedger, PlaybackSample, StreamLedger};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Required rate of a cumulative indicator: `Σ_j z^j (r^j − r^{j−1})`, with `r^{−1} = 0`.
///
/// For a prefix ending at level `l` this is `r^l`; an all-zero `z` gives 0.
pub fn required_rate<T: Real>(z: &[bool], rates: &[T]) -> T {
    let mut prev = T::zero();
    let mut total = T::zero();
    for (&zj, &r) in z.iter().zip(rates) {
        if zj {
            total += r - prev;
        }
        prev = r;
    }
    total
}

/// `[q − service]⁺ + arrival`.
pub fn step_rsu_queue<T: Real>(q: T, service: T, arrival: T) -> T {
    (q - service).pos() + arrival
}

/// RSU and SL queues of a free vehicle. Only bits actually queued at the RSU
/// are relayed: the SL receives `min(backhaul, q_b)`.
pub fn step_free_queues<T: Real>(q_b: T, q_s: T, backhaul: T, sl_service: T, arrival: T) -> (T, T) {
    ((q_b - backhaul).pos() + arrival, (q_s - sl_service).pos() + backhaul.min(q_b))
}

/// `[v + q(t+1) − ε(q(0) − Ψ·r^req)]⁺`; `q` and `q0` are the role's summed queues.
pub fn step_virtual_queue<T: Real>(v: T, q_next: T, q0: T, epsilon: T, psi: T, r_req: T) -> T {
    (v + q_next - epsilon * (q0 - psi * r_req)).pos()
}

/// `av + (current − av)/t` for `t ≥ 1`.
pub fn update_running_average<T: Real>(av: &mut [T], current: &[T], t: u64) {
    assert!(t >= 1);
    let inv = T::one() / T::lit(t as f64);
    for (a, &c) in av.iter_mut().zip(current) {
        *a += (c - *a) * inv;
    }
}

/// Which virtual queue a vehicle currently holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VirtualKind {
    /// `U`, for leaders and compelled vehicles.
    U,
    /// `Y`, for free vehicles.
    Y,
}

/// Queue state for all vehicles, indexed by vehicle id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueState<T> {
    /// Bits waiting at the RSU.
    pub q_b: Vec<T>,
    /// Bits waiting at the serving slice leader.
    pub q_s: Vec<T>,
    /// Value of `U` or `Y`.
    pub virt: Vec<T>,
    pub kind: Vec<VirtualKind>,
    pub q_b0: Vec<T>,
    pub q_s0: Vec<T>,
    pub x_av: Vec<Vec<T>>,
    pub z_av: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Real> QueueState<T> {
    pub fn new(num_vehicles: usize, q0: T, num_rbs: usize, levels: usize) -> Self {
        Self {
            q_b: vec![q0; num_vehicles],
            q_s: vec![T::zero(); num_vehicles],
            virt: vec![T::zero(); num_vehicles],
            kind: vec![VirtualKind::U; num_vehicles],
            q_b0: vec![q0; num_vehicles],
            q_s0: vec![T::zero(); num_vehicles],
            x_av: vec![vec![T::zero(); num_rbs]; num_vehicles],
            z_av: vec![vec![T::zero(); levels]; num_vehicles],
            t: 0,
        }
    }

    /// Switches `v` between `U` and `Y`, keeping the value. Leaving the free
    /// role returns any bits held at the old leader to the RSU queue.
    pub fn set_role(&mut self, v: usize, kind: VirtualKind) {
        if self.kind[v] == kind {
            return;
        }
        if kind == VirtualKind::U {
            self.q_b[v] += self.q_s[v];
            self.q_s[v] = T::zero();
        }
        self.kind[v] = kind;
    }

    /// Total backlog of `v` across both hops.
    pub fn backlog(&self, v: usize) -> T {
        self.q_b[v] + self.q_s[v]
    }

    /// Initial value matching the current role: `q_b0` for `U`, `q_b0 + q_s0` for `Y`.
    pub fn q0(&self, v: usize) -> T {
        match self.kind[v] {
            VirtualKind::U => self.q_b0[v],
            VirtualKind::Y => self.q_b0[v] + self.q_s0[v],
        }
    }

    /// Current queue matching the role: `q_b` for `U`, `q_b + q_s` for `Y`.
    pub fn role_queue(&self, v: usize) -> T {
        match self.kind[v] {
            VirtualKind::U => self.q_b[v],
            VirtualKind::Y => self.q_b[v] + self.q_s[v],
        }
    }

    /// Steps every virtual queue after the actual queues have been stepped.
    pub fn step_virtual(&mut self, epsilon: T, psi: T, r_req: &[T]) {
        for v in 0..self.virt.len() {
            self.virt[v] = step_virtual_queue(self.virt[v], self.role_queue(v), self.q0(v), epsilon, psi, r_req[v]);
        }
    }

    /// Advances `t` and folds this slot's controls into the running averages.
    pub fn update_averages(&mut self, x: &[Vec<T>], z: &[Vec<T>]) {
        self.t += 1;
        for v in 0..self.x_av.len() {
            update_running_average(&mut self.x_av[v], &x[v], self.t);
            update_running_average(&mut self.z_av[v], &z[v], self.t);
        }
    }
}
