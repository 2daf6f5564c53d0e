use serde::{Deserialize, Serialize};

use crate::model::{SlicePartition, SlotDecision, VehicleId};

/// Outcome of the backhaul check for one slice leader.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BackhaulStatus {
    Satisfied,
    /// Relay rates were multiplied by this factor.
    Scaled(f64),
    /// The leader's V2I rate is below its own demand; relaying is switched off.
    Starved,
}

/// Enforces `r_bs − Σ r_sf ≥ r_s^req` by scaling the relay rates in place.
pub fn enforce_backhaul(r_bs: f64, own: f64, relay: &mut [f64]) -> BackhaulStatus {
    let total: f64 = relay.iter().sum();
    if r_bs - total >= own {
        return BackhaulStatus::Satisfied;
    }
    if r_bs < own {
        relay.iter_mut().for_each(|r| *r = 0.0);
        return BackhaulStatus::Starved;
    }
    let f = (r_bs - own) / total;
    relay.iter_mut().for_each(|r| *r *= f);
    BackhaulStatus::Scaled(f)
}

/// Applies [`enforce_backhaul`] to every leader of the decision and returns the starved ones.
pub fn enforce_backhaul_decision(d: &mut SlotDecision, partition: &SlicePartition) -> Vec<VehicleId> {
    let mut starved = Vec::new();
    for (&s, members) in &partition.free {
        let r_bs = d.backhaul_rate.get(&s).copied().unwrap_or(0.0);
        let own = d.leader_demand.get(&s).copied().unwrap_or(0.0);
        let ids: Vec<VehicleId> = members.iter().copied().collect();
        let mut rates: Vec<f64> = ids.iter().map(|f| d.relay_rate.get(f).copied().unwrap_or(0.0)).collect();
        if enforce_backhaul(r_bs, own, &mut rates) == BackhaulStatus::Starved {
            tracing::debug!(leader = s, r_bs, own, "slice leader starved");
            starved.push(s);
        }
        for (f, r) in ids.into_iter().zip(rates) {
            d.relay_rate.insert(f, r);
        }
    }
    starved
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn satisfied_case() {
        let mut r = [2.0, 3.0];
        assert_eq!(enforce_backhaul(10.0, 2.0, &mut r), BackhaulStatus::Satisfied);
        assert_eq!(r, [2.0, 3.0]);
    }

    #[test]
    fn proportional_scaling() {
        let mut r = [2.0, 3.0];
        assert_eq!(enforce_backhaul(6.0, 2.0, &mut r), BackhaulStatus::Scaled(0.8));
        assert!((r.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        assert!((r[0] / r[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_free_vehicles() {
        assert_eq!(enforce_backhaul(3.0, 2.0, &mut []), BackhaulStatus::Satisfied);
        assert_eq!(enforce_backhaul(1.0, 2.0, &mut []), BackhaulStatus::Starved);
    }

    #[test]
    fn starved_leader_stops_relaying() {
        let mut r = [1.0];
        assert_eq!(enforce_backhaul(1.0, 2.0, &mut r), BackhaulStatus::Starved);
        assert_eq!(r, [0.0]);
    }
}
