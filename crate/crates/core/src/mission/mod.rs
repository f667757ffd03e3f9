//! Grasp mission: object catalog, gripper model, contact proxy and the
//! phase sequencer.

mod controller;
mod grasp;
mod gripper;
mod objects;

pub use controller::{MissionConfig, MissionController, MissionOutput, MissionPhase};
pub use grasp::{evaluate_grasp, ContactPhase, ContactTracker, GraspMonitor, GraspOutcome, MonitorStep, EVAL_WINDOW};
pub use gripper::{GripperModel, PairAxis, CLOSED_ANGLE_DEG, FINGERS_PER_PAIR, OPEN_ANGLE_DEG, PAIRS};
pub use objects::{ObjectCatalog, ObjectSpec, DEFAULT_CATALOG_TOML, MAX_PAYLOAD};

use crate::simsuite::VehicleParams;
use crate::trajgen::TrajError;

#[derive(Debug, thiserror::Error)]
pub enum MissionError {
    #[error("invalid object: {0}")]
    InvalidObject(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("invalid gripper: {0}")]
    InvalidGripper(&'static str),
    #[error("log covers [{:.3}, {:.3}] s but [{:.3}, {:.3}] s is needed", have.0, have.1, need.0, need.1)]
    LogWindow { need: (f64, f64), have: (f64, f64) },
    #[error("payload {requested} kg exceeds limit {limit} kg")]
    PayloadLimit { requested: f64, limit: f64 },
    #[error("illegal transition {from:?} -> {to:?}")]
    IllegalTransition { from: MissionPhase, to: MissionPhase },
    #[error("invalid command: {0}")]
    InvalidCommand(String),
    #[error("no usable state estimate")]
    EstimatorFault,
    #[error(transparent)]
    Plan(TrajError),
}

/// Vehicle parameters after attaching `object` as payload.
pub fn attach_payload(vehicle: &VehicleParams, object: &ObjectSpec) -> Result<VehicleParams, MissionError> {
    let limit = vehicle.max_payload.min(MAX_PAYLOAD);
    let requested = vehicle.payload + object.mass;
    if requested > limit + 1e-12 {
        return Err(MissionError::PayloadLimit { requested, limit });
    }
    let mut v = vehicle.clone();
    v.payload = requested;
    v.mass += object.mass;
    Ok(v)
}
