use serde::{Deserialize, Serialize};

use super::swoop::SwoopPlan;
use super::TrajError;
use crate::messages::SetpointMsg;

/// Position-loop rate at which setpoints are streamed, Hz.
pub const SETPOINT_RATE_HZ: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedSetpoint {
    /// Plan time, s.
    pub t: f64,
    pub setpoint: SetpointMsg,
}

/// Samples the plan every `1/rate` seconds: `⌈duration·rate⌉ + 1` setpoints
/// starting at plan time 0. A last sample falling past the end holds the
/// final state.
pub fn setpoint_stream(plan: &SwoopPlan, rate: f64) -> Result<Vec<TimedSetpoint>, TrajError> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(TrajError::InvalidParams("setpoint rate must be positive"));
    }
    // Guard against duration * rate landing a hair above an integer.
    let n = ((plan.duration() * rate) - 1e-9).ceil().max(0.0) as usize + 1;
    Ok((0..n)
        .map(|k| {
            let t = k as f64 / rate;
            TimedSetpoint {
                t,
                setpoint: plan.setpoint_at(t),
            }
        })
        .collect())
}
