//! Scenario configuration, the video ladder, and their validation.
//!
//! Files carry the units used on data sheets (dBm, km/h, kbps). Values are
//! converted to SI units on load and all arithmetic downstream is linear.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{dbm_to_watts, watts_to_dbm};

/// Scheduler selection for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Proposed,
    Baseline1,
    Baseline2,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] =
        [SchedulerKind::Proposed, SchedulerKind::Baseline1, SchedulerKind::Baseline2];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Proposed => "proposed",
            SchedulerKind::Baseline1 => "baseline1",
            SchedulerKind::Baseline2 => "baseline2",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchedulerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "proposed" => Ok(SchedulerKind::Proposed),
            "baseline1" => Ok(SchedulerKind::Baseline1),
            "baseline2" => Ok(SchedulerKind::Baseline2),
            other => Err(format!("unknown scheduler `{other}`")),
        }
    }
}

mod dbm {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(super::watts_to_dbm(*w))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d).map(super::dbm_to_watts)
    }
}

mod kmh {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(v * 3.6)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d).map(|v| v / 3.6)
    }
}

mod kbps {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(r / 1e3)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d).map(|r| r * 1e3)
    }
}

/// All scenario and algorithm parameters. Units are SI in memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of RSUs; derived as `floor(highway_length / inter_rsu_distance)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_rsus: Option<usize>,
    pub inter_rsu_distance: f64,
    pub rsu_lateral_offset: f64,
    pub highway_length: f64,
    pub num_lanes: usize,
    pub lane_width: f64,
    #[serde(rename = "vehicle_speed_kmh", with = "kmh")]
    pub vehicle_speed: f64,
    pub inter_vehicle_distance: f64,
    #[serde(rename = "rsu_tx_power_dbm", with = "dbm")]
    pub rsu_tx_power: f64,
    #[serde(rename = "sl_tx_power_dbm", with = "dbm")]
    pub sl_tx_power: f64,
    pub rb_bandwidth: f64,
    pub num_rbs_rsu: usize,
    pub num_rbs_sl: usize,
    #[serde(rename = "noise_power_dbm", with = "dbm")]
    pub noise_power: f64,
    pub epsilon: f64,
    pub playback_threshold: f64,
    pub neighborhood_size: f64,
    pub reslicing_period: u64,
    pub slot_duration: f64,
    pub gamma: f64,
    pub beta: f64,
    pub alpha: f64,
    pub eta: f64,
    pub ccp_max_iters: usize,
    pub ccp_tolerance: f64,
    pub seed: u64,

    pub carrier_v2i: f64,
    pub carrier_v2v: f64,
    pub pathloss_exponent_v2i: f64,
    pub pathloss_exponent_v2v: f64,
    /// Rayleigh block fading per (link, RB, slot); off gives pure path loss.
    pub fading: bool,
    pub weak_sinr_threshold_db: f64,
    /// Use `exp(-d²/2σ²)` instead of `exp(-d/2σ²)` for the similarity kernel.
    pub squared_kernel: bool,
    /// Similarities below this value are dropped from the adjacency matrix.
    pub similarity_floor: f64,
    pub kmeans_restarts: usize,
    /// Weight level `j` by `γ^(J-1-j)` instead of `γ^j`.
    pub reversed_quality_weights: bool,
    /// Give RBs left idle by the drift-plus-penalty solve to backlogged vehicles.
    pub work_conserving: bool,
    /// Session length in chunks; unlimited when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_chunks: Option<usize>,
    /// Granularity of latency samples.
    pub frame_duration: f64,
    /// Baseline 2 edge zone as a fraction of the inter-RSU span.
    pub edge_fraction: f64,
    /// Baseline 2 relay search radius.
    pub relay_radius: f64,
    /// Proportional-fair averaging window in slots.
    pub pf_window: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_rsus: None,
            inter_rsu_distance: 1732.0,
            rsu_lateral_offset: 35.0,
            highway_length: 10_000.0,
            num_lanes: 6,
            lane_width: 4.0,
            vehicle_speed: 140.0 / 3.6,
            inter_vehicle_distance: 800.0,
            rsu_tx_power: dbm_to_watts(46.0),
            sl_tx_power: dbm_to_watts(20.0),
            rb_bandwidth: 180e3,
            num_rbs_rsu: 25,
            num_rbs_sl: 25,
            noise_power: dbm_to_watts(-112.4),
            epsilon: 0.1,
            playback_threshold: 0.25,
            neighborhood_size: 10.0,
            reslicing_period: 100,
            slot_duration: 1e-3,
            gamma: 0.5,
            beta: 0.5,
            alpha: 10.0,
            eta: 1e14,
            ccp_max_iters: 20,
            ccp_tolerance: 1e-6,
            seed: 1,
            carrier_v2i: 2e9,
            carrier_v2v: 5.9e9,
            pathloss_exponent_v2i: 3.68,
            pathloss_exponent_v2v: 2.75,
            fading: true,
            weak_sinr_threshold_db: 3.0,
            squared_kernel: false,
            similarity_floor: 1e-6,
            kmeans_restarts: 50,
            reversed_quality_weights: false,
            work_conserving: true,
            num_chunks: None,
            frame_duration: 0.04,
            edge_fraction: 0.2,
            relay_radius: 200.0,
            pf_window: 100.0,
        }
    }
}

impl ScenarioConfig {
    pub fn rsu_count(&self) -> usize {
        self.num_rsus
            .unwrap_or((self.highway_length / self.inter_rsu_distance).floor() as usize)
    }

    /// Vehicles per lane for the configured spacing.
    pub fn vehicles_per_lane(&self) -> usize {
        (self.highway_length / self.inter_vehicle_distance).floor() as usize
    }

    pub fn vehicles_per_rsu(&self) -> f64 {
        (self.vehicles_per_lane() * self.num_lanes) as f64 / self.rsu_count().max(1) as f64
    }

    /// Ψ expressed in slots.
    pub fn playback_threshold_slots(&self) -> f64 {
        self.playback_threshold / self.slot_duration
    }

    /// QoE weight of level `j` among `levels`.
    pub fn level_weight(&self, j: usize, levels: usize) -> f64 {
        let e = if self.reversed_quality_weights { levels - 1 - j } else { j };
        self.gamma.powi(e as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityLevel {
    pub label: String,
    #[serde(rename = "rate_kbps", with = "kbps")]
    pub rate: f64,
}

/// Quality ladder; `levels[j].rate` is `r^(j)` in bits/second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoCatalog {
    pub levels: Vec<QualityLevel>,
    pub chunk_duration: f64,
}

impl Default for VideoCatalog {
    fn default() -> Self {
        let lv = |label: &str, kbps: f64| QualityLevel { label: label.into(), rate: kbps * 1e3 };
        Self {
            levels: vec![lv("240p", 400.0), lv("480p", 800.0), lv("720p", 1200.0)],
            chunk_duration: 1.0,
        }
    }
}

impl VideoCatalog {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.rate).collect()
    }

    /// `Δr^j = r^j − r^{j−1}`, with `r^{−1} = 0`.
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.levels
            .iter()
            .map(|l| {
                let d = l.rate - prev;
                prev = l.rate;
                d
            })
            .collect()
    }

    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }
}

/// One failed predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub predicate: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.predicate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ConfigErrors(pub Vec<Violation>);

impl ConfigErrors {
    pub fn mentions(&self, needle: &str) -> bool {
        self.0.iter().any(|v| v.to_string().contains(needle))
    }
}

/// Checks every invariant and reports all failures at once.
pub fn validate_config(cfg: &ScenarioConfig, catalog: &VideoCatalog) -> Result<(), ConfigErrors> {
    let mut errs = Vec::new();
    let mut fail = |field: &str, predicate: &str| {
        errs.push(Violation { field: field.into(), predicate: predicate.into() })
    };
    let open01 = |x: f64| x > 0.0 && x < 1.0;

    if !open01(cfg.epsilon) {
        fail("epsilon", "out of (0,1)");
    }
    if !open01(cfg.gamma) {
        fail("gamma", "out of (0,1)");
    }
    if !(0.0..=1.0).contains(&cfg.beta) {
        fail("beta", "out of [0,1]");
    }
    if !(cfg.alpha > 0.0) {
        fail("alpha", "not positive");
    }
    if !(cfg.eta >= 0.0) || !cfg.eta.is_finite() {
        fail("eta", "negative or not finite");
    }
    if cfg.num_rbs_rsu < 1 {
        fail("num_rbs_rsu", "less than 1");
    }
    if cfg.num_rbs_sl < 1 {
        fail("num_rbs_sl", "less than 1");
    }
    if cfg.num_lanes < 1 {
        fail("num_lanes", "less than 1");
    }
    let positive = [
        ("inter_rsu_distance", cfg.inter_rsu_distance),
        ("rsu_lateral_offset", cfg.rsu_lateral_offset),
        ("highway_length", cfg.highway_length),
        ("lane_width", cfg.lane_width),
        ("vehicle_speed", cfg.vehicle_speed),
        ("inter_vehicle_distance", cfg.inter_vehicle_distance),
        ("rsu_tx_power", cfg.rsu_tx_power),
        ("sl_tx_power", cfg.sl_tx_power),
        ("rb_bandwidth", cfg.rb_bandwidth),
        ("noise_power", cfg.noise_power),
        ("playback_threshold", cfg.playback_threshold),
        ("neighborhood_size", cfg.neighborhood_size),
        ("slot_duration", cfg.slot_duration),
        ("carrier_v2i", cfg.carrier_v2i),
        ("carrier_v2v", cfg.carrier_v2v),
        ("pathloss_exponent_v2i", cfg.pathloss_exponent_v2i),
        ("pathloss_exponent_v2v", cfg.pathloss_exponent_v2v),
        ("frame_duration", cfg.frame_duration),
        ("relay_radius", cfg.relay_radius),
        ("pf_window", cfg.pf_window),
        ("ccp_tolerance", cfg.ccp_tolerance),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            fail(name, "not strictly positive");
        }
    }
    if cfg.reslicing_period < 1 {
        fail("reslicing_period", "less than 1");
    }
    if cfg.ccp_max_iters < 1 {
        fail("ccp_max_iters", "less than 1");
    }
    if cfg.kmeans_restarts < 1 {
        fail("kmeans_restarts", "less than 1");
    }
    if !(0.0..0.5).contains(&cfg.edge_fraction) {
        fail("edge_fraction", "out of [0,0.5)");
    }
    if !(cfg.similarity_floor >= 0.0 && cfg.similarity_floor < 1.0) {
        fail("similarity_floor", "out of [0,1)");
    }
    if cfg.weak_sinr_threshold_db.is_nan() {
        fail("weak_sinr_threshold_db", "is NaN");
    }
    if cfg.rsu_count() < 1 {
        fail("num_rsus", "less than 1");
    } else if cfg.inter_rsu_distance > 0.0
        && cfg.rsu_count() as f64 * cfg.inter_rsu_distance > cfg.highway_length + 1e-9
    {
        fail("num_rsus", "does not fit on the highway");
    }
    if cfg.num_chunks == Some(0) {
        fail("num_chunks", "is zero");
    }

    if catalog.levels.is_empty() {
        fail("levels", "empty");
    } else {
        if catalog.levels.windows(2).any(|w| !(w[0].rate < w[1].rate)) {
            fail("rates", "not increasing");
        }
        if !(catalog.levels[0].rate > 0.0) {
            fail("rates", "not strictly positive");
        }
    }
    if !(catalog.chunk_duration > 0.0) {
        fail("chunk_duration", "not strictly positive");
    } else if cfg.slot_duration > 0.0 {
        let slots = catalog.chunk_duration / cfg.slot_duration;
        if (slots - slots.round()).abs() > 1e-6 || slots.round() < 1.0 {
            fail("chunk_duration", "not a whole number of slots");
        }
        let frames = cfg.frame_duration / cfg.slot_duration;
        if (frames - frames.round()).abs() > 1e-6 || frames.round() < 1.0 {
            fail("frame_duration", "not a whole number of slots");
        }
    }
    // The Markov bound needs q(0) − Ψ·r^req > 0 at every level, with
    // q(0) = (Ψ + chunk)·r^(0).
    if let (Some(first), Some(last)) = (catalog.levels.first(), catalog.levels.last()) {
        let q0 = (cfg.playback_threshold + catalog.chunk_duration) * first.rate;
        if !(q0 - cfg.playback_threshold * last.rate > 0.0) {
            fail("playback_threshold", "leaves q(0) - psi*r non-positive at the top level");
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(ConfigErrors(errs))
    }
}

/// Simulation length and output options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    /// Simulated seconds.
    pub duration: f64,
    pub scheduler: SchedulerKind,
    /// 0: figures and summary; 1: adds sample and partition traces; 2: adds queue and decision traces; 3: adds SINR of granted RBs.
    pub trace_level: u8,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { duration: 30.0, scheduler: SchedulerKind::Proposed, trace_level: 0 }
    }
}

/// Complete contents of a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    pub video: VideoCatalog,
    pub run: RunSettings,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let mut res = validate_config(&self.scenario, &self.video);
        let slots = self.run.duration / self.scenario.slot_duration;
        if !(self.run.duration >= 0.0) || (slots - slots.round()).abs() > 1e-6 {
            let v = Violation { field: "duration".into(), predicate: "not a whole number of slots".into() };
            match &mut res {
                Err(ConfigErrors(list)) => list.push(v),
                Ok(()) => res = Err(ConfigErrors(vec![v])),
            }
        }
        res
    }

    pub fn num_slots(&self) -> u64 {
        (self.run.duration / self.scenario.slot_duration).round() as u64
    }
}
