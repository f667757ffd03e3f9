use serde::{Deserialize, Serialize};

use super::gripper::GripperModel;
use super::MissionError;
use crate::messages::{GripperCmdMsg, GripperState, MissionCmdMsg, MissionVerb, SetpointMsg};
use crate::simsuite::RigidBodyState;
use crate::trajgen::{plan_swoop, AxisState, SwoopParams, SwoopPlan};

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionPhase {
    Idle,
    Takeoff,
    Approach,
    Swoop,
    GraspTriggered,
    Lift,
    Exit,
    Land,
    Aborted,
}

impl MissionPhase {
    pub const ALL: [MissionPhase; 9] = [
        Self::Idle,
        Self::Takeoff,
        Self::Approach,
        Self::Swoop,
        Self::GraspTriggered,
        Self::Lift,
        Self::Exit,
        Self::Land,
        Self::Aborted,
    ];

    pub fn can_transition(self, to: MissionPhase) -> bool {
        use MissionPhase::*;
        match (self, to) {
            (Aborted, Aborted) => false,
            (_, Aborted) => true,
            (Idle, Takeoff)
            | (Takeoff, Approach)
            | (Takeoff, Land)
            | (Approach, Swoop)
            | (Approach, Land)
            | (Swoop, GraspTriggered)
            // Trigger never armed: carry on without closing.
            | (Swoop, Lift)
            | (GraspTriggered, Lift)
            | (Lift, Exit)
            | (Exit, Land)
            | (Land, Idle)
            | (Aborted, Land) => true,
            _ => false,
        }
    }

    pub fn is_airborne(self) -> bool {
        !matches!(self, Self::Idle)
    }

    /// Phases that follow the swoop plan.
    pub fn in_plan(self) -> bool {
        matches!(self, Self::Swoop | Self::GraspTriggered | Self::Lift | Self::Exit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    /// Position error below which a waypoint counts as reached, m.
    pub arrival_tolerance: f64,
    /// Speed below which the vehicle counts as settled, m/s.
    pub settle_speed: f64,
    /// Climb above the abort position, m.
    pub abort_climb: f64,
    pub land_speed: f64,
    /// Floor height, m.
    pub ground_z: f64,
    /// Landed once this close to the floor, m.
    pub touchdown_height: f64,
    /// Poses older than this make the estimate unusable, s.
    pub stale_after: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            arrival_tolerance: 0.05,
            settle_speed: 0.1,
            abort_climb: 0.5,
            land_speed: 0.5,
            ground_z: 0.0,
            touchdown_height: 0.05,
            stale_after: 0.1,
        }
    }
}

/// How far the operator has asked the mission to go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Goal {
    Hover,
    Object,
    Swoop,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MissionOutput {
    pub setpoint: Option<SetpointMsg>,
    pub gripper: Option<GripperCmdMsg>,
    /// Phase changes made during this call, in order.
    pub transitions: Vec<(MissionPhase, MissionPhase)>,
    /// Horizontal distance to the object when Closed was sent.
    pub trigger_distance: Option<f64>,
}

/// Offboard mission sequencer for one object.
#[derive(Debug, Clone)]
pub struct MissionController {
    phase: MissionPhase,
    goal: Goal,
    object_name: String,
    object: [f64; 3],
    approach_dir: [f64; 2],
    params: SwoopParams,
    gripper: GripperModel,
    cfg: MissionConfig,
    plan: Option<SwoopPlan>,
    plan_start: f64,
    closed_sent: bool,
    hold: SetpointMsg,
    land_from: Option<(f64, f64)>,
}

impl MissionController {
    /// `object` is the grasp point; `approach_dir` the horizontal flight
    /// direction through it.
    pub fn new(
        object_name: impl Into<String>,
        object: [f64; 3],
        approach_dir: [f64; 2],
        params: SwoopParams,
        gripper: GripperModel,
        cfg: MissionConfig,
    ) -> Result<Self, MissionError> {
        params.validate().map_err(MissionError::Plan)?;
        gripper.validate()?;
        let n = approach_dir[0].hypot(approach_dir[1]);
        if !(n > 1e-9) || object.iter().any(|x| !x.is_finite()) {
            return Err(MissionError::InvalidCommand("approach direction must be a nonzero vector".into()));
        }
        Ok(Self {
            phase: MissionPhase::Idle,
            goal: Goal::Hover,
            object_name: object_name.into(),
            object,
            approach_dir: [approach_dir[0] / n, approach_dir[1] / n],
            params,
            gripper,
            cfg,
            plan: None,
            plan_start: 0.0,
            closed_sent: false,
            hold: SetpointMsg::default(),
            land_from: None,
        })
    }

    pub fn phase(&self) -> MissionPhase {
        self.phase
    }

    pub fn plan(&self) -> Option<&SwoopPlan> {
        self.plan.as_ref()
    }

    /// Mission time at which the plan started.
    pub fn plan_start(&self) -> Option<f64> {
        self.plan.as_ref().map(|_| self.plan_start)
    }

    pub fn approach_point(&self) -> [f64; 3] {
        let d = self.params.approach_standoff;
        [
            self.object[0] - d * self.approach_dir[0],
            self.object[1] - d * self.approach_dir[1],
            self.object[2],
        ]
    }

    fn heading(&self) -> f64 {
        self.approach_dir[1].atan2(self.approach_dir[0])
    }

    fn go(&mut self, to: MissionPhase, out: &mut MissionOutput) -> Result<(), MissionError> {
        if !self.phase.can_transition(to) {
            return Err(MissionError::IllegalTransition { from: self.phase, to });
        }
        out.transitions.push((self.phase, to));
        self.phase = to;
        Ok(())
    }

    fn abort(&mut self, est: Option<&RigidBodyState>, out: &mut MissionOutput) {
        if self.phase == MissionPhase::Aborted {
            return;
        }
        let base = est.map_or(self.hold.position, |e| e.position.into());
        self.hold = SetpointMsg::hold([base[0], base[1], base[2] + self.cfg.abort_climb], self.hold.yaw);
        out.transitions.push((self.phase, MissionPhase::Aborted));
        self.phase = MissionPhase::Aborted;
        out.gripper = Some(GripperModel::command(GripperState::Open));
        out.setpoint = Some(self.hold);
    }

    /// Applies an operator command.
    pub fn command(
        &mut self,
        cmd: &MissionCmdMsg,
        t: f64,
        est: Option<&RigidBodyState>,
    ) -> Result<MissionOutput, MissionError> {
        let mut out = MissionOutput::default();
        if cmd.verb.needs_target() && cmd.target_id != self.object_name {
            return Err(MissionError::InvalidCommand(format!("unknown target {}", cmd.target_id)));
        }
        match cmd.verb {
            MissionVerb::Abort => self.abort(est, &mut out),
            MissionVerb::Land => {
                if matches!(self.phase, MissionPhase::Takeoff | MissionPhase::Approach | MissionPhase::Exit | MissionPhase::Aborted) {
                    self.go(MissionPhase::Land, &mut out)?;
                    self.land_from = Some((t, self.hold.position[2]));
                } else if self.phase != MissionPhase::Land {
                    return Err(MissionError::IllegalTransition {
                        from: self.phase,
                        to: MissionPhase::Land,
                    });
                }
            }
            verb => {
                let goal = match verb {
                    MissionVerb::Takeoff => Goal::Hover,
                    MissionVerb::GotoObject => Goal::Object,
                    _ => Goal::Swoop,
                };
                self.goal = self.goal.max(goal);
                if self.phase == MissionPhase::Idle {
                    let e = est.ok_or(MissionError::EstimatorFault)?;
                    self.hold = SetpointMsg::hold([e.position.x, e.position.y, self.object[2]], self.heading());
                    self.go(MissionPhase::Takeoff, &mut out)?;
                    out.gripper = Some(GripperModel::command(GripperState::Open));
                }
            }
        }
        Ok(out)
    }

    fn arrived(&self, est: &RigidBodyState, target: [f64; 3]) -> bool {
        let d = (est.position - nalgebra::Vector3::from(target)).norm();
        d <= self.cfg.arrival_tolerance && est.velocity.norm() <= self.cfg.settle_speed
    }

    /// One sequencer tick at mission time `t`. `est` is `None` when the
    /// estimate is unavailable or stale, which aborts an airborne mission.
    pub fn advance(&mut self, t: f64, est: Option<&RigidBodyState>) -> MissionOutput {
        let mut out = MissionOutput::default();
        let Some(e) = est.filter(|e| e.is_finite()) else {
            if self.phase.is_airborne() && self.phase != MissionPhase::Aborted {
                self.abort(None, &mut out);
            } else if self.phase == MissionPhase::Aborted {
                out.setpoint = Some(self.hold);
            }
            return out;
        };
        // Only legal transitions are issued below.
        let r = self.step_phase(t, e, &mut out);
        debug_assert!(r.is_ok());
        out
    }

    fn step_phase(&mut self, t: f64, e: &RigidBodyState, out: &mut MissionOutput) -> Result<(), MissionError> {
        use MissionPhase::*;
        if self.phase == Takeoff && self.goal >= Goal::Object && self.arrived(e, self.hold.position) {
            self.go(Approach, out)?;
            self.hold = SetpointMsg::hold(self.approach_point(), self.heading());
        }
        if self.phase == Approach && self.goal == Goal::Swoop && self.arrived(e, self.hold.position) {
            let start = self.hold.position.map(AxisState::at_rest);
            match plan_swoop(start, self.object, &self.params) {
                Ok(plan) => {
                    self.plan = Some(plan);
                    self.plan_start = t;
                    self.closed_sent = false;
                    self.go(Swoop, out)?;
                }
                Err(_) => {
                    self.abort(Some(e), out);
                    return Ok(());
                }
            }
        }
        if self.phase.in_plan() {
            let plan = self.plan.as_ref().expect("plan exists in plan phases");
            let tau = t - self.plan_start;
            let grasp_time = plan.grasp_time;
            let lift_end = grasp_time + plan.segments[1][0].duration;
            let end = plan.duration();
            let sp = plan.setpoint_at(tau);
            let exit_hold = SetpointMsg::hold(plan.exit_point, plan.yaw());
            if self.phase == Swoop {
                let dist = (e.position.x - self.object[0]).hypot(e.position.y - self.object[1]);
                let due = tau >= grasp_time - self.gripper.actuation_time - TIME_EPS;
                if due && !self.closed_sent && dist <= self.gripper.trigger_radius {
                    self.closed_sent = true;
                    out.gripper = Some(GripperModel::command(GripperState::Closed));
                    out.trigger_distance = Some(dist);
                    self.go(GraspTriggered, out)?;
                } else if tau >= grasp_time - TIME_EPS {
                    self.go(Lift, out)?;
                }
            }
            if self.phase == GraspTriggered && tau >= grasp_time - TIME_EPS {
                self.go(Lift, out)?;
            }
            if self.phase == Lift && tau >= lift_end - TIME_EPS {
                self.go(Exit, out)?;
            }
            if self.phase == Exit && tau >= end - TIME_EPS {
                self.hold = exit_hold;
                self.land_from = Some((t, exit_hold.position[2]));
                self.go(Land, out)?;
            } else {
                out.setpoint = Some(sp);
                return Ok(());
            }
        }
        if self.phase == Land {
            let (t0, z0) = *self.land_from.get_or_insert((t, self.hold.position[2]));
            let floor = self.cfg.ground_z;
            let z = (z0 - self.cfg.land_speed * (t - t0)).max(floor);
            let mut sp = self.hold;
            sp.position[2] = z;
            sp.velocity[2] = if z > floor { -self.cfg.land_speed } else { 0.0 };
            out.setpoint = Some(sp);
            if e.position.z - floor <= self.cfg.touchdown_height && e.velocity.norm() <= self.cfg.settle_speed {
                self.land_from = None;
                self.goal = Goal::Hover;
                self.go(Idle, out)?;
            }
            return Ok(());
        }
        if matches!(self.phase, Takeoff | Approach | Aborted) {
            out.setpoint = Some(self.hold);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn controller() -> MissionController {
        MissionController::new(
            "bottle",
            [0.0, 0.0, 1.0],
            [1.0, 0.0],
            SwoopParams::default(),
            GripperModel::default(),
            MissionConfig::default(),
        )
        .unwrap()
    }

    fn at(x: f64, y: f64, z: f64) -> RigidBodyState {
        RigidBodyState::at_rest(Vector3::new(x, y, z))
    }

    /// Starts a swoop with the vehicle parked at the approach point.
    fn swooping(c: &mut MissionController) {
        let a = at(-2.0, 0.0, 1.0);
        c.command(&MissionCmdMsg::new(MissionVerb::ExecuteSwoop, "bottle"), 0.0, Some(&a)).unwrap();
        let out = c.advance(0.0, Some(&a));
        assert_eq!(c.phase(), MissionPhase::Swoop);
        assert_eq!(
            out.transitions,
            [(MissionPhase::Takeoff, MissionPhase::Approach), (MissionPhase::Approach, MissionPhase::Swoop)]
        );
    }

    #[test]
    fn transition_table() {
        use MissionPhase::*;
        assert!(Idle.can_transition(Takeoff));
        assert!(!Idle.can_transition(Swoop));
        assert!(!Swoop.can_transition(Exit));
        assert!(!Lift.can_transition(Swoop));
        for p in MissionPhase::ALL {
            assert_eq!(p.can_transition(Aborted), p != Aborted);
        }
    }

    #[test]
    fn far_from_object_no_gripper_command() {
        let mut c = controller();
        swooping(&mut c);
        // Grasp is due but the vehicle is 3 m away.
        let out = c.advance(1.9, Some(&at(-3.0, 0.0, 1.0)));
        assert!(out.gripper.is_none());
        assert_ne!(c.phase(), MissionPhase::GraspTriggered);
    }

    #[test]
    fn single_closed_command_inside_radius() {
        let mut c = controller();
        swooping(&mut c);
        let mut closed = 0;
        let ticks = (c.plan().unwrap().duration() / 0.02).ceil() as u32;
        for k in 0..=ticks {
            let t = k as f64 * 0.02;
            let plan = c.plan().unwrap().clone();
            let p = plan.state_at(t);
            let e = RigidBodyState {
                velocity: Vector3::new(p[0].v, p[1].v, p[2].v),
                ..at(p[0].p, p[1].p, p[2].p)
            };
            let out = c.advance(t, Some(&e));
            if let Some(g) = out.gripper {
                assert_eq!(g.state, GripperState::Closed);
                let d = out.trigger_distance.unwrap();
                assert!(d <= GripperModel::default().trigger_radius);
                closed += 1;
            }
        }
        assert_eq!(closed, 1);
        assert_eq!(c.phase(), MissionPhase::Land);
    }

    #[test]
    fn abort_during_swoop_opens_and_climbs() {
        let mut c = controller();
        swooping(&mut c);
        let e = at(-1.0, 0.1, 1.0);
        let out = c.command(&MissionCmdMsg::new(MissionVerb::Abort, ""), 1.0, Some(&e)).unwrap();
        assert_eq!(c.phase(), MissionPhase::Aborted);
        assert_eq!(out.gripper.unwrap().state, GripperState::Open);
        let sp = out.setpoint.unwrap();
        assert_eq!(sp.position, [-1.0, 0.1, 1.5]);
        assert_eq!(sp.velocity, [0.0; 3]);
        let next = c.advance(1.02, Some(&e));
        assert_eq!(next.setpoint.unwrap().position, [-1.0, 0.1, 1.5]);
    }

    #[test]
    fn estimator_fault_aborts() {
        let mut c = controller();
        swooping(&mut c);
        let out = c.advance(0.5, None);
        assert_eq!(c.phase(), MissionPhase::Aborted);
        assert_eq!(out.gripper.unwrap().state, GripperState::Open);
        let mut bad = at(0.0, 0.0, 1.0);
        bad.position.x = f64::NAN;
        let mut c = controller();
        swooping(&mut c);
        c.advance(0.5, Some(&bad));
        assert_eq!(c.phase(), MissionPhase::Aborted);
    }

    #[test]
    fn takeoff_opens_gripper_and_waits() {
        let mut c = controller();
        let ground = at(-2.0, 0.0, 0.0);
        let out = c.command(&MissionCmdMsg::new(MissionVerb::Takeoff, ""), 0.0, Some(&ground)).unwrap();
        assert_eq!(out.gripper.unwrap().state, GripperState::Open);
        let out = c.advance(0.0, Some(&ground));
        assert_eq!(c.phase(), MissionPhase::Takeoff);
        assert_eq!(out.setpoint.unwrap().position, [-2.0, 0.0, 1.0]);
        // Hover goal: stays put once up.
        c.advance(1.0, Some(&at(-2.0, 0.0, 1.0)));
        assert_eq!(c.phase(), MissionPhase::Takeoff);
        assert!(c.command(&MissionCmdMsg::new(MissionVerb::GotoObject, "anvil"), 1.0, None).is_err());
    }

    #[test]
    fn land_reaches_idle() {
        let mut c = controller();
        let a = at(-2.0, 0.0, 1.0);
        c.command(&MissionCmdMsg::new(MissionVerb::Takeoff, ""), 0.0, Some(&a)).unwrap();
        c.command(&MissionCmdMsg::new(MissionVerb::Land, ""), 0.0, Some(&a)).unwrap();
        let sp = c.advance(1.0, Some(&a)).setpoint.unwrap();
        assert!((sp.position[2] - 0.5).abs() < 1e-12);
        c.advance(3.0, Some(&at(-2.0, 0.0, 0.01)));
        assert_eq!(c.phase(), MissionPhase::Idle);
    }
}
