use nalgebra::{UnitQuaternion, Vector3};

use super::dynamics::RigidBodyState;
use super::params::{EstimatorConfig, Extrapolation};
use crate::messages::PoseMsg;

/// Pose-only state estimator with latency compensation.
///
/// Velocity is the finite difference of the last two poses. The state is
/// pushed forward by the configured compensation delay plus the time since
/// the newest pose arrived.
#[derive(Debug, Clone)]
pub struct Estimator {
    cfg: EstimatorConfig,
    last: Option<Fix>,
    velocity: Vector3<f64>,
    discarded: u64,
}

#[derive(Debug, Clone, Copy)]
struct Fix {
    timestamp: f64,
    received: f64,
    position: Vector3<f64>,
    orientation: UnitQuaternion<f64>,
}

impl Estimator {
    pub fn new(cfg: EstimatorConfig) -> Self {
        Self {
            cfg,
            last: None,
            velocity: Vector3::zeros(),
            discarded: 0,
        }
    }

    /// Starts from a known state instead of waiting for two poses.
    pub fn initialized(cfg: EstimatorConfig, state: &RigidBodyState, now: f64) -> Self {
        let mut e = Self::new(cfg);
        e.last = Some(Fix {
            timestamp: now,
            received: now,
            position: state.position,
            orientation: state.orientation,
        });
        e.velocity = state.velocity;
        e
    }

    /// Folds in a pose captured at `timestamp` and received at `now`;
    /// returns the compensated estimate, or `None` if the pose is older
    /// than the previous one and was discarded.
    pub fn update(&mut self, timestamp: f64, pose: &PoseMsg, now: f64) -> Option<RigidBodyState> {
        let position = Vector3::from(pose.position);
        let [w, x, y, z] = pose.orientation;
        let orientation = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
        if let Some(prev) = self.last {
            if timestamp < prev.timestamp {
                self.discarded += 1;
                return None;
            }
            let dt = timestamp - prev.timestamp;
            if dt > 0.0 {
                self.velocity = (position - prev.position) / dt;
            }
        }
        self.last = Some(Fix {
            timestamp,
            received: now,
            position,
            orientation,
        });
        self.predict(now)
    }

    /// Estimate at `now`.
    pub fn predict(&self, now: f64) -> Option<RigidBodyState> {
        let fix = self.last?;
        let horizon = self.cfg.compensation_delay + (now - fix.received).max(0.0);
        let position = match self.cfg.extrapolation {
            Extrapolation::Hold => fix.position,
            Extrapolation::ConstantVelocity => fix.position + self.velocity * horizon,
        };
        Some(RigidBodyState {
            position,
            velocity: self.velocity,
            orientation: fix.orientation,
            body_rates: Vector3::zeros(),
        })
    }

    /// Time since the newest pose arrived.
    pub fn age(&self, now: f64) -> Option<f64> {
        self.last.map(|f| now - f.received)
    }

    pub fn discarded(&self) -> u64 {
        self.discarded
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(delay: f64, extrapolation: Extrapolation) -> EstimatorConfig {
        EstimatorConfig {
            compensation_delay: delay,
            extrapolation,
        }
    }

    fn pose(x: f64) -> PoseMsg {
        PoseMsg::identity_at([x, 0.0, 1.0])
    }

    #[test]
    fn compensates_matching_latency() {
        let latency = 0.02;
        let v = 1.5;
        let mut e = Estimator::new(cfg(latency, Extrapolation::ConstantVelocity));
        let mut est = None;
        for k in 0..10 {
            let ts = k as f64 * 0.01;
            est = e.update(ts, &pose(v * ts), ts + latency);
        }
        let t_now = 0.09 + latency;
        let est = est.unwrap();
        assert!((est.position.x - v * t_now).abs() < 1e-12);
        assert!((est.velocity.x - v).abs() < 1e-9);
    }

    #[test]
    fn hold_lags_by_latency() {
        let latency = 0.02;
        let v = 2.0;
        let mut e = Estimator::new(cfg(latency, Extrapolation::Hold));
        let mut est = None;
        for k in 0..10 {
            let ts = k as f64 * 0.01;
            est = e.update(ts, &pose(v * ts), ts + latency);
        }
        let lag = v * (0.09 + latency) - est.unwrap().position.x;
        assert!((lag - v * latency).abs() < 1e-12);
    }

    #[test]
    fn stationary_target_any_delay() {
        for delay in [0.0, 0.01, 0.2] {
            let mut e = Estimator::new(cfg(delay, Extrapolation::ConstantVelocity));
            for k in 0..5 {
                e.update(k as f64 * 0.01, &pose(3.0), k as f64 * 0.01 + 0.05);
            }
            let est = e.predict(1.0).unwrap();
            assert_eq!(est.position.x, 3.0);
        }
    }

    #[test]
    fn discards_out_of_order() {
        let mut e = Estimator::new(cfg(0.0, Extrapolation::ConstantVelocity));
        e.update(0.02, &pose(1.0), 0.02);
        assert!(e.update(0.01, &pose(5.0), 0.03).is_none());
        assert_eq!(e.discarded(), 1);
        assert_eq!(e.predict(0.03).unwrap().position.x, 1.0);
    }
}
