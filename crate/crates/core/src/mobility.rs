//! Six-lane ring highway with constant-velocity vehicles and a regular RSU grid.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{RsuId, ScenarioConfig, VehicleId};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MobilityError {
    #[error("empty lane: inter_vehicle_distance {spacing} exceeds highway_length {length}")]
    EmptyLane { spacing: f64, length: f64 },
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

/// Signed shortest displacement from `a` to `b` on a ring of length `len`.
pub fn ring_dx<T: Real>(a: T, b: T, len: T) -> T {
    let mut d = (b - a) % len;
    let half = len / T::lit(2.0);
    if d > half {
        d -= len;
    } else if d < -half {
        d += len;
    }
    d
}

/// Euclidean distance with the x axis wrapped.
pub fn ring_distance<T: Real>(p: Point<T>, q: Point<T>, len: T) -> T {
    ring_dx(p.x, q.x, len).hypot(q.y - p.y)
}

pub fn wrap<T: Real>(x: T, len: T) -> T {
    let r = x % len;
    if r < T::zero() { r + len } else { r }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState<T> {
    pub id: VehicleId,
    pub pos: Point<T>,
    pub lane: usize,
    pub direction: i8,
    pub speed: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsuSite<T> {
    pub id: RsuId,
    pub pos: Point<T>,
}

/// Lanes in the lower half travel towards −x.
pub fn lane_direction(lane: usize, num_lanes: usize) -> i8 {
    if lane < num_lanes / 2 { -1 } else { 1 }
}

/// Places vehicles on every lane at fixed spacing behind a random phase, and
/// RSUs every `inter_rsu_distance` starting at half that distance.
pub fn spawn_topology<T: Real, R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<(Vec<VehicleState<T>>, Vec<RsuSite<T>>), MobilityError> {
    if cfg.inter_vehicle_distance > cfg.highway_length {
        return Err(MobilityError::EmptyLane {
            spacing: cfg.inter_vehicle_distance,
            length: cfg.highway_length,
        });
    }
    let per_lane = cfg.vehicles_per_lane();
    let mut vehicles = Vec::with_capacity(per_lane * cfg.num_lanes);
    for lane in 0..cfg.num_lanes {
        let phase = rng.random::<f64>() * cfg.inter_vehicle_distance;
        let y = (lane as f64 + 0.5 - cfg.num_lanes as f64 / 2.0) * cfg.lane_width;
        for k in 0..per_lane {
            let x = (phase + k as f64 * cfg.inter_vehicle_distance) % cfg.highway_length;
            vehicles.push(VehicleState {
                id: vehicles.len(),
                pos: Point::new(T::lit(x), T::lit(y)),
                lane,
                direction: lane_direction(lane, cfg.num_lanes),
                speed: T::lit(cfg.vehicle_speed),
            });
        }
    }
    let rsus = (0..cfg.rsu_count())
        .map(|b| {
            let side = if b % 2 == 0 { 1.0 } else { -1.0 };
            RsuSite {
                id: b,
                pos: Point::new(
                    T::lit(cfg.inter_rsu_distance / 2.0 + b as f64 * cfg.inter_rsu_distance),
                    T::lit(side * cfg.rsu_lateral_offset),
                ),
            }
        })
        .collect();
    Ok((vehicles, rsus))
}

/// Constant-velocity step with wrap-around.
pub fn advance<T: Real>(
    vehicles: &[VehicleState<T>],
    dt: T,
    highway_length: T,
) -> Result<Vec<VehicleState<T>>, MobilityError> {
    if !(dt > T::zero()) {
        return Err(MobilityError::NonPositiveStep(dt.as_f64()));
    }
    Ok(vehicles
        .iter()
        .map(|v| {
            let dx = T::lit(f64::from(v.direction)) * v.speed * dt;
            VehicleState { pos: Point::new(wrap(v.pos.x + dx, highway_length), v.pos.y), ..*v }
        })
        .collect())
}

/// Nearest RSU by wrapped Euclidean distance; ties go to the lower id.
pub fn nearest_rsu<T: Real>(p: Point<T>, rsus: &[RsuSite<T>], len: T) -> RsuId {
    let mut best = (T::infinity(), 0);
    for r in rsus {
        let d = ring_distance(p, r.pos, len);
        if d < best.0 {
            best = (d, r.id);
        }
    }
    best.1
}

/// Writes `id,x,y,lane,direction` rows.
pub fn dump_topology<T: Real, W: Write>(vehicles: &[VehicleState<T>], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "x", "y", "lane", "direction"])?;
    for v in vehicles {
        w.write_record([
            v.id.to_string(),
            v.pos.x.to_string(),
            v.pos.y.to_string(),
            v.lane.to_string(),
            v.direction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
