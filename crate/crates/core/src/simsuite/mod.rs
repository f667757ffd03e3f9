//! Quadrotor simulation: rigid-body dynamics, the position/attitude/rate
//! controller cascade, motion capture and a latency-compensating estimator.
//!
//! ```
//! use nalgebra::Vector3;
//! use raptor::messages::SetpointMsg;
//! use raptor::simsuite::{ClosedLoop, RigidBodyState, SimConfig};
//!
//! let cfg = SimConfig::default().noiseless();
//! let start = RigidBodyState::at_rest(Vector3::new(0.0, 0.0, 2.0));
//! let mut sim = ClosedLoop::new(&cfg, start, 1);
//! let mut hold = |_t: f64| SetpointMsg::hold([0.5, 0.0, 2.0], 0.0);
//! sim.run::<std::io::Sink>(4.0, &mut hold, None).unwrap();
//! assert!((sim.vehicle.state().position.x - 0.5).abs() < 0.01);
//! ```

mod control;
mod dynamics;
mod estimator;
mod lateral;
pub mod log;
mod mocap;
mod params;
mod vehicle;

pub use control::{attitude_error, attitude_from_thrust_dir, position_ctl, AttitudeController, AttitudeTarget, RateController};
pub use dynamics::{ground_effect_multiplier, step_dynamics, Disturbances, Mixer, RigidBodyState, MAX_STEP};
pub use estimator::Estimator;
pub use lateral::LateralNoise;
pub use log::{read_jsonl, EventRecord, JsonlWriter, LogRecord, StateRecord, TickRecord, TraceSample};
pub use mocap::{Mocap, MocapSample};
pub use params::{
    AttitudeGains, EstimatorConfig, Extrapolation, GainSet, GroundEffectConfig, LateralNoiseConfig, LoopRates,
    MocapConfig, PositionGains, RateGains, SimConfig, VehicleParams, DEFAULT_CONFIG_TOML, GRAVITY,
};
pub use vehicle::{ClosedLoop, LoopCounts, Vehicle};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("integration step {0} s outside (0, 2 ms]")]
    InvalidStep(f64),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("payload {requested} kg exceeds limit {limit} kg")]
    PayloadLimit { requested: f64, limit: f64 },
    #[error("log: {0}")]
    Log(String),
}
