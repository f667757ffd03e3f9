//! Experiment harness: single trials, campaigns and latency benchmarks.

mod bench;
mod campaign;
mod config;
mod metrics;
mod trial;

pub use bench::{bench, BenchRow, BenchTable};
pub use campaign::{
    run_campaign, CampaignConfig, CampaignResult, Check, Distribution, ObjectStats, SummaryRow, SummaryStats,
    MIN_SPEED_BAND, ORDERING_MIN_ATTEMPTS, REFERENCE_SUCCESS, SUCCESS_TOLERANCE, VELOCITY_BAND, VELOCITY_MAX_STD,
};

pub use config::{LabConfig, NoiseOverrides, Scene, TrialConfig, DEFAULT_ATTEMPTS};
pub use metrics::{
    average_grasp_velocity, min_speed_near, wilson_interval, MeanStd, MIN_SPEED_HALF_WINDOW, WINDOW_HALF_LENGTH,
};
pub use trial::{
    run_trial, run_trial_detailed, trial_seed, TrialRecord, TrialRun, GRIPPER_TOPIC, MISSION_TOPIC, POSE_TOPIC,
    SETPOINT_TOPIC,
};

use crate::bus::BusError;
use crate::messages::CodecError;
use crate::mission::MissionError;
use crate::simsuite::SimError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),
    #[error("velocity window: {0}")]
    Window(&'static str),
    #[error(transparent)]
    Mission(#[from] MissionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(String),
}
