use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Delivered volume against elapsed time for one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlaybackLedger<T> {
    pub delivered_bits: T,
    /// Seconds of video delivered.
    pub delivered_playback: T,
    pub demanded_rate: T,
    pub elapsed: T,
}

impl<T: Real> PlaybackLedger<T> {
    /// Seconds of video ahead of the playhead.
    pub fn buffered_playback(&self) -> T {
        self.delivered_playback - self.elapsed
    }

    /// Constant-rate step: `bits` count as `bits / demanded_rate` seconds.
    pub fn step(&mut self, bits: T, dt: T) {
        if self.demanded_rate > T::zero() {
            self.record(bits, bits / self.demanded_rate, dt);
        }
    }

    /// Step with the playback duration of the delivered bits given explicitly.
    pub fn record(&mut self, bits: T, seconds: T, dt: T) {
        self.delivered_bits += bits;
        self.delivered_playback += seconds;
        if self.demanded_rate > T::zero() {
            self.elapsed += dt;
        }
    }
}

/// End-to-end delay of one video frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    /// Time at which the frame's last bit had arrived.
    pub ready: f64,
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Segment<T> {
    index: i64,
    bits: T,
    /// Encoding rate, bits/second.
    rate: T,
}

/// FIFO of undelivered bits, grouped into frames tagged with their encoding rate.
///
/// Delivered bits are credited to the playback ledger at the rate they were
/// encoded with, and each frame yields a latency sample when its last bit is
/// delivered after the frame has closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamLedger<T> {
    segments: VecDeque<Segment<T>>,
    frame_slots: u64,
    dt: T,
    pub playback: PlaybackLedger<T>,
}

impl<T: Real> StreamLedger<T> {
    pub fn new(frame_slots: u64, dt: T) -> Self {
        assert!(frame_slots >= 1);
        Self { segments: VecDeque::new(), frame_slots, dt, playback: PlaybackLedger::default() }
    }

    /// Bits present before the first slot (the prefetch); their frame is closed at time 0.
    pub fn preload(&mut self, bits: T, rate: T) {
        if bits > T::zero() {
            self.segments.push_back(Segment { index: -1, bits, rate });
        }
    }

    pub fn pending(&self) -> T {
        self.segments.iter().map(|s| s.bits).fold(T::zero(), |a, b| a + b)
    }

    /// Appends bits arriving at the end of `slot`.
    pub fn arrive(&mut self, bits: T, rate: T, slot: u64) {
        if bits <= T::zero() {
            return;
        }
        let index = (slot / self.frame_slots) as i64;
        match self.segments.back_mut() {
            Some(s) if s.index == index && s.rate == rate => s.bits += bits,
            _ => self.segments.push_back(Segment { index, bits, rate }),
        }
    }

    fn ready_time(&self, index: i64) -> T {
        T::lit(((index + 1) as u64 * self.frame_slots) as f64) * self.dt
    }

    /// Removes `bits` from the head during `slot`. `capacity` is the slot's
    /// service opportunity and places each departure inside the slot.
    /// Also advances the playback clock by one slot.
    pub fn deliver(&mut self, bits: T, capacity: T, slot: u64, out: &mut Vec<LatencySample>) {
        let mut left = bits;
        let mut done = T::zero();
        let mut seconds = T::zero();
        let now = T::lit(slot as f64);
        while left > T::zero() {
            let Some(front) = self.segments.front_mut() else { break };
            let take = front.bits.min(left);
            front.bits -= take;
            left -= take;
            done += take;
            seconds += take / front.rate;
            if front.bits > T::zero() {
                break;
            }
            let (index, closed) = (front.index, front.index < 0 || (front.index as u64 + 1) * self.frame_slots <= slot);
            self.segments.pop_front();
            let frame_done = self.segments.front().is_none_or(|n| n.index != index);
            if closed && frame_done {
                let frac = if capacity > T::zero() { (done / capacity).min(T::one()) } else { T::one() };
                let ready = if index < 0 { T::zero() } else { self.ready_time(index) };
                let depart = (now + frac) * self.dt;
                out.push(LatencySample { ready: ready.as_f64(), latency: (depart - ready).pos().as_f64() });
            }
        }
        self.playback.record(done, seconds, self.dt);
    }
}

/// One `(vehicle, slot)` observation of buffered playback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaybackSample {
    pub time: f64,
    pub vehicle: usize,
    pub buffered: f64,
    pub demanded_rate: f64,
}

/// Fraction of active post-warm-up samples with buffered playback at or below `psi`.
pub fn reliability_estimate(samples: &[PlaybackSample], psi: f64, warmup: f64) -> Option<f64> {
    let (mut n, mut bad) = (0usize, 0usize);
    for s in samples {
        if s.time < warmup || s.demanded_rate <= 0.0 {
            continue;
        }
        n += 1;
        if s.buffered <= psi {
            bad += 1;
        }
    }
    (n > 0).then(|| bad as f64 / n as f64)
}
