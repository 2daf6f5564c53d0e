//! Simulator for adaptive video streaming over a sliced vehicular downlink.
//!
//! Vehicles on a ring highway are served by roadside units directly or,
//! when their V2I link is weak, through an elected slice leader over V2V.
//! Slices are formed by spectral clustering and leaders by nearest-centroid
//! election. Each slot a drift-plus-penalty scheduler assigns resource
//! blocks and, at chunk boundaries, video quality, while virtual queues keep
//! the probability of a near-empty playback buffer below a target.
//!
//! The numeric core is generic over [`Real`]; the aliases below fix it to `f64`.

pub mod channel;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod mobility;
pub mod model;
pub mod queueing;
pub mod scalar;
pub mod scheduler;
pub mod slicing;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Snapshot = channel::ChannelSnapshot<f64>;
pub type Queues = queueing::QueueState<f64>;
pub type Vehicle = mobility::VehicleState<f64>;
pub type Rsu = mobility::RsuSite<f64>;
pub type Coefficients = scheduler::DppCoefficients<f64>;
