//! Minimum-jerk trajectories and the swoop planner.
//!
//! Each axis is planned independently. For a start state `(p0, v0, a0)` and
//! duration `T` the jerk-optimal trajectory has jerk quadratic in time,
//! `j(t) = α t²/2 + β t + γ`, and [`solve_axis`] returns the coefficients in
//! closed form for every combination of fixed and free end components.
//!
//! ```
//! use raptor::trajgen::{solve_axis, AxisGoal, AxisState};
//!
//! let p = solve_axis(AxisState::default(), AxisGoal::rest(1.0), 1.0)?;
//! assert!((p.velocity(0.5) - 1.875).abs() < 1e-12);
//! assert!((p.cost() - 720.0).abs() < 1e-9);
//! # Ok::<(), raptor::trajgen::TrajError>(())
//! ```

mod axis;
mod feasibility;
mod stream;
mod swoop;

use thiserror::Error;

pub use axis::{solve_axis, AxisGoal, AxisState, JerkProfile};
pub use feasibility::{check_feasibility, AxisFeasibility, DynamicLimits, FeasibilityReport, Offender, Quantity, CHECK_RATE_HZ};
pub use stream::{setpoint_stream, TimedSetpoint, SETPOINT_RATE_HZ};
pub use swoop::{plan_swoop, SwoopParams, SwoopPlan};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajError {
    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("goal leaves position, velocity and acceleration all free")]
    Unconstrained,
    #[error("non-finite boundary value")]
    NonFinite,
    #[error("t = {t} outside [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("invalid JSON: {0}")]
    Json(String),
}
