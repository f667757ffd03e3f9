use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dynamics::RigidBodyState;
use super::params::MocapConfig;
use crate::messages::PoseMsg;

/// One motion-capture measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MocapSample {
    /// When the pose was captured; becomes the envelope timestamp.
    pub sample_time: f64,
    /// When it reaches subscribers.
    pub delivery_time: f64,
    pub pose: PoseMsg,
}

/// Simulated tracker: Gaussian position noise, fixed latency, random
/// dropouts, all driven by a seeded generator.
#[derive(Debug, Clone)]
pub struct Mocap {
    cfg: MocapConfig,
    rng: ChaCha8Rng,
    in_flight: VecDeque<MocapSample>,
    dropped: u64,
}

impl Mocap {
    pub fn new(cfg: MocapConfig) -> Self {
        let seed = cfg.seed;
        Self::with_seed(cfg, seed)
    }

    pub fn with_seed(cfg: MocapConfig, seed: u64) -> Self {
        Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            in_flight: VecDeque::new(),
            dropped: 0,
        }
    }

    pub fn config(&self) -> &MocapConfig {
        &self.cfg
    }

    pub fn period(&self) -> f64 {
        1.0 / f64::from(self.cfg.rate_hz)
    }

    /// Measures `truth` at time `now`; `None` when the sample drops out.
    pub fn sample(&mut self, truth: &RigidBodyState, now: f64) -> Option<MocapSample> {
        if self.cfg.dropout_prob > 0.0 && self.rng.random::<f64>() < self.cfg.dropout_prob {
            self.dropped += 1;
            return None;
        }
        let mut p = truth.position;
        let sigma = self.cfg.position_noise_sigma;
        if sigma > 0.0 {
            for x in p.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut self.rng);
                *x += sigma * n;
            }
        }
        let q = truth.orientation.into_inner();
        Some(MocapSample {
            sample_time: now,
            delivery_time: now + self.cfg.latency,
            pose: PoseMsg::new([p.x, p.y, p.z], [q.w, q.i, q.j, q.k]),
        })
    }

    /// Samples and holds the result until its delivery time.
    pub fn capture(&mut self, truth: &RigidBodyState, now: f64) {
        if let Some(s) = self.sample(truth, now) {
            self.in_flight.push_back(s);
        }
    }

    /// Next in-flight sample due by `now`.
    pub fn pop_delivered(&mut self, now: f64) -> Option<MocapSample> {
        // Tolerate rounding in tick-based clocks.
        if self.in_flight.front()?.delivery_time <= now + 1e-9 {
            self.in_flight.pop_front()
        } else {
            None
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}
