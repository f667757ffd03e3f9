//! Geometric contact proxy for the finger-ray gripper.
//!
//! At closure completion the finger pairs either land on the object or
//! miss it. While at least one pair holds and the object still sits on its
//! stand, the object pins the gripper horizontally through a stiff
//! spring-damper. The grasp succeeds if the drone then climbs by the
//! object's lift travel before sliding past the object's ends.

use serde::{Deserialize, Serialize};

use super::gripper::GripperModel;
use super::objects::ObjectSpec;
use super::MissionError;
use crate::simsuite::TraceSample;

/// Trace needed before and after closure for a post-hoc evaluation, s.
pub const EVAL_WINDOW: (f64, f64) = (0.5, 1.0);

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspOutcome {
    /// 0, 1 or 2.
    pub pairs_in_contact: u8,
    pub success: bool,
    /// Gripper center left of the object center at closure, m.
    pub lateral_offset_at_grasp: f64,
    pub speed_at_grasp: f64,
    pub lifted: bool,
    /// Gripper center past the object center at closure, m.
    pub longitudinal_offset_at_grasp: f64,
    pub closure_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactPhase {
    Open,
    /// Fingers shut on the object, object still on the stand.
    Holding,
    Lifted,
    Slipped,
    /// Fingers shut on nothing.
    Missed,
}

impl ContactPhase {
    pub fn is_final(self) -> bool {
        matches!(self, Self::Lifted | Self::Slipped | Self::Missed)
    }
}

#[derive(Debug, Clone)]
pub struct ContactTracker {
    object: ObjectSpec,
    gripper: GripperModel,
    object_pos: [f64; 3],
    axis: [f64; 2],
    phase: ContactPhase,
    anchor: [f64; 3],
    outcome: Option<GraspOutcome>,
}

impl ContactTracker {
    /// `axis` is the horizontal unit flight direction through the object.
    pub fn new(object: ObjectSpec, gripper: GripperModel, object_pos: [f64; 3], axis: [f64; 2]) -> Self {
        Self {
            object,
            gripper,
            object_pos,
            axis,
            phase: ContactPhase::Open,
            anchor: [0.0; 3],
            outcome: None,
        }
    }

    pub fn phase(&self) -> ContactPhase {
        self.phase
    }

    pub fn object(&self) -> &ObjectSpec {
        &self.object
    }

    fn along(&self, p: &[f64; 3]) -> f64 {
        (p[0] - self.object_pos[0]) * self.axis[0] + (p[1] - self.object_pos[1]) * self.axis[1]
    }

    fn cross(&self, p: &[f64; 3]) -> f64 {
        -(p[0] - self.object_pos[0]) * self.axis[1] + (p[1] - self.object_pos[1]) * self.axis[0]
    }

    /// Fingers finish closing with the gripper at `s`.
    pub fn close(&mut self, s: &TraceSample) {
        if self.phase != ContactPhase::Open {
            return;
        }
        let dy = self.cross(&s.position);
        let heading = self.axis[1].atan2(self.axis[0]);
        let yaw_err = wrap_angle(s.yaw - heading);
        let pairs = self.gripper.pairs_in_contact(dy, yaw_err, self.object.width());
        self.anchor = s.position;
        self.outcome = Some(GraspOutcome {
            pairs_in_contact: pairs,
            success: false,
            lateral_offset_at_grasp: dy,
            speed_at_grasp: s.speed(),
            lifted: false,
            longitudinal_offset_at_grasp: self.along(&s.position),
            closure_time: s.t,
        });
        self.phase = if pairs == 0 {
            ContactPhase::Missed
        } else {
            ContactPhase::Holding
        };
        self.observe(s);
    }

    /// Advances the contact state with a later sample.
    pub fn observe(&mut self, s: &TraceSample) -> ContactPhase {
        if self.phase == ContactPhase::Holding {
            let window = self.object.length() / 2.0 + self.gripper.longitudinal_margin;
            if s.position[2] - self.anchor[2] >= self.object.lift_travel {
                self.phase = ContactPhase::Lifted;
                if let Some(o) = self.outcome.as_mut() {
                    o.lifted = true;
                    o.success = true;
                }
            } else if self.along(&s.position).abs() > window {
                self.phase = ContactPhase::Slipped;
            }
        }
        self.phase
    }

    /// Horizontal force the held object exerts on the vehicle, N.
    pub fn hold_force(&self, s: &TraceSample) -> [f64; 3] {
        if self.phase != ContactPhase::Holding {
            return [0.0; 3];
        }
        let k = self.gripper.contact_stiffness;
        let c = self.gripper.contact_damping;
        [
            -k * (s.position[0] - self.anchor[0]) - c * s.velocity[0],
            -k * (s.position[1] - self.anchor[1]) - c * s.velocity[1],
            0.0,
        ]
    }

    /// `None` until the fingers have closed.
    pub fn outcome(&self) -> Option<GraspOutcome> {
        self.outcome
    }
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    a - two_pi * ((a + std::f64::consts::PI) / two_pi).floor()
}

/// Grasp outcome from a recorded true-state trace and the time the
/// fingers finished closing.
pub fn evaluate_grasp(
    trace: &[TraceSample],
    closure_time: f64,
    object: &ObjectSpec,
    object_pos: [f64; 3],
    axis: [f64; 2],
    gripper: &GripperModel,
) -> Result<GraspOutcome, MissionError> {
    let need = (closure_time - EVAL_WINDOW.0, closure_time + EVAL_WINDOW.1);
    let (first, last) = match (trace.first(), trace.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(MissionError::LogWindow { need, have: (f64::NAN, f64::NAN) }),
    };
    if first > need.0 + TIME_EPS || last < need.1 - TIME_EPS {
        return Err(MissionError::LogWindow { need, have: (first, last) });
    }
    let mut tracker = ContactTracker::new(object.clone(), gripper.clone(), object_pos, axis);
    for s in trace.iter().filter(|s| s.t >= closure_time - TIME_EPS) {
        if tracker.phase() == ContactPhase::Open {
            tracker.close(s);
        } else if tracker.observe(s).is_final() {
            break;
        }
    }
    Ok(tracker.outcome().expect("window contains the closure time"))
}

/// Online gripper and contact model running beside the vehicle.
#[derive(Debug, Clone)]
pub struct GraspMonitor {
    tracker: ContactTracker,
    actuation_time: f64,
    closes_at: Option<f64>,
    attached: bool,
}

/// What the monitor asks of the simulation for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MonitorStep {
    pub force: [f64; 3],
    /// Object mass to attach this tick.
    pub attach: Option<f64>,
}

impl GraspMonitor {
    pub fn new(tracker: ContactTracker, gripper: &GripperModel) -> Self {
        Self {
            tracker,
            actuation_time: gripper.actuation_time,
            closes_at: None,
            attached: false,
        }
    }

    /// The actuator received a Closed command at `t`. Repeats are ignored.
    pub fn command_closed(&mut self, t: f64) {
        if self.closes_at.is_none() {
            self.closes_at = Some(t + self.actuation_time);
        }
    }

    /// When the fingers finish (or finished) closing.
    pub fn closure_time(&self) -> Option<f64> {
        self.closes_at
    }

    pub fn tracker(&self) -> &ContactTracker {
        &self.tracker
    }

    pub fn step(&mut self, s: &TraceSample) -> MonitorStep {
        match (self.tracker.phase(), self.closes_at) {
            (ContactPhase::Open, Some(tc)) if s.t >= tc - TIME_EPS => self.tracker.close(s),
            (ContactPhase::Open, _) => {}
            _ => {
                self.tracker.observe(s);
            }
        }
        let mut out = MonitorStep {
            force: self.tracker.hold_force(s),
            attach: None,
        };
        if self.tracker.phase() == ContactPhase::Lifted && !self.attached {
            self.attached = true;
            out.attach = Some(self.tracker.object().mass);
        }
        out
    }
}
