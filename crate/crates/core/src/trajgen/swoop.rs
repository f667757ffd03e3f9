//! Three-segment swoop: approach through the grasp point at a planned
//! through-velocity, climb while moving forward, and come to rest at the
//! exit point.

use serde::{Deserialize, Serialize};

use super::axis::{solve_axis, AxisGoal, AxisState, JerkProfile};
use super::TrajError;
use crate::messages::SetpointMsg;

/// Swoop tuning. The defaults are calibrated constants, not measured ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwoopParams {
    /// Horizontal distance of the approach and exit points from the grasp
    /// point, m.
    pub approach_standoff: f64,
    /// Planned speed at the grasp point, m/s.
    pub grasp_speed: f64,
    /// Durations of approach, lift and exit segments, s.
    pub segment_durations: [f64; 3],
    /// Height of the exit point above the grasp point, m.
    pub lift_height: f64,
    /// Climb angle of the grasp-point velocity above horizontal, degrees.
    pub grasp_climb_angle_deg: f64,
    /// Upward acceleration at the grasp point, m/s².
    pub grasp_vertical_accel: f64,
    /// Along-track distance covered by the end of the lift segment, m.
    pub lift_forward: f64,
}

impl Default for SwoopParams {
    fn default() -> Self {
        Self {
            approach_standoff: 2.0,
            grasp_speed: 0.6,
            segment_durations: [2.3, 0.5, 1.4],
            lift_height: 0.08,
            grasp_climb_angle_deg: 30.0,
            grasp_vertical_accel: 2.0,
            lift_forward: 0.4,
        }
    }
}

impl SwoopParams {
    pub fn validate(&self) -> Result<(), TrajError> {
        let positive = [
            self.approach_standoff,
            self.grasp_speed,
            self.lift_height,
            self.lift_forward,
            self.segment_durations[0],
            self.segment_durations[1],
            self.segment_durations[2],
        ];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(TrajError::InvalidParams("swoop distances, speed and durations must be positive"));
        }
        if !(0.0..90.0).contains(&self.grasp_climb_angle_deg) || !self.grasp_vertical_accel.is_finite() {
            return Err(TrajError::InvalidParams("climb angle must lie in [0, 90) degrees"));
        }
        if self.lift_forward >= self.approach_standoff {
            return Err(TrajError::InvalidParams("lift_forward must be shorter than the standoff"));
        }
        Ok(())
    }

    pub fn window_duration(&self) -> f64 {
        self.segment_durations.iter().sum()
    }

    pub fn from_json(text: &str) -> Result<Self, TrajError> {
        let p: Self = serde_json::from_str(text).map_err(|e| TrajError::Json(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwoopPlan {
    /// Per-segment `[x, y, z]` profiles, back to back.
    pub segments: Vec<[JerkProfile; 3]>,
    pub approach_point: [f64; 3],
    pub grasp_point: [f64; 3],
    pub exit_point: [f64; 3],
    /// Time of the grasp point within the plan, s.
    pub grasp_time: f64,
    /// Horizontal unit vector from approach to exit.
    pub approach_axis: [f64; 2],
    pub params: SwoopParams,
}

/// Plans a swoop from the drone's current state through `object` along the
/// horizontal line joining them.
pub fn plan_swoop(drone: [AxisState; 3], object: [f64; 3], params: &SwoopParams) -> Result<SwoopPlan, TrajError> {
    params.validate()?;
    if drone.iter().any(|s| !s.is_finite()) || object.iter().any(|x| !x.is_finite()) {
        return Err(TrajError::NonFinite);
    }
    let dx = object[0] - drone[0].p;
    let dy = object[1] - drone[1].p;
    let dist = dx.hypot(dy);
    if dist < 1e-6 {
        return Err(TrajError::Degenerate("object is at the drone's horizontal position"));
    }
    let u = [dx / dist, dy / dist];
    let d = params.approach_standoff;
    let approach_point = [object[0] - d * u[0], object[1] - d * u[1], object[2]];
    let exit_point = [object[0] + d * u[0], object[1] + d * u[1], object[2] + params.lift_height];

    let [t1, t2, t3] = params.segment_durations;
    let climb = params.grasp_climb_angle_deg.to_radians();
    let v_h = params.grasp_speed * climb.cos();
    let grasp_goal = [
        AxisGoal::full(object[0], v_h * u[0], 0.0),
        AxisGoal::full(object[1], v_h * u[1], 0.0),
        AxisGoal::full(object[2], params.grasp_speed * climb.sin(), params.grasp_vertical_accel),
    ];
    let seg1 = solve3(drone, grasp_goal, t1)?;

    let at_grasp = ends(&seg1);
    let lift_goal = [
        AxisGoal::position(object[0] + params.lift_forward * u[0]),
        AxisGoal::position(object[1] + params.lift_forward * u[1]),
        AxisGoal {
            p: Some(exit_point[2]),
            v: Some(0.0),
            a: None,
        },
    ];
    let seg2 = solve3(at_grasp, lift_goal, t2)?;

    let exit_goal = exit_point.map(AxisGoal::rest);
    let seg3 = solve3(ends(&seg2), exit_goal, t3)?;

    Ok(SwoopPlan {
        segments: vec![seg1, seg2, seg3],
        approach_point,
        grasp_point: object,
        exit_point,
        grasp_time: t1,
        approach_axis: u,
        params: params.clone(),
    })
}

fn solve3(start: [AxisState; 3], goal: [AxisGoal; 3], t: f64) -> Result<[JerkProfile; 3], TrajError> {
    Ok([
        solve_axis(start[0], goal[0], t)?,
        solve_axis(start[1], goal[1], t)?,
        solve_axis(start[2], goal[2], t)?,
    ])
}

fn ends(seg: &[JerkProfile; 3]) -> [AxisState; 3] {
    [seg[0].end_state(), seg[1].end_state(), seg[2].end_state()]
}

impl SwoopPlan {
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s[0].duration).sum()
    }

    pub fn segment_start_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s[0].duration;
                start
            })
            .collect()
    }

    fn locate(&self, t: f64) -> (&[JerkProfile; 3], f64) {
        let mut t = t.max(0.0);
        let last = self.segments.len() - 1;
        for (i, seg) in self.segments.iter().enumerate() {
            let d = seg[0].duration;
            if t <= d || i == last {
                return (seg, t.min(d));
            }
            t -= d;
        }
        unreachable!("plans have at least one segment")
    }

    /// Planned state at plan time `t`, held at the ends outside the plan.
    pub fn state_at(&self, t: f64) -> [AxisState; 3] {
        let (seg, local) = self.locate(t);
        [seg[0].sample(local).0, seg[1].sample(local).0, seg[2].sample(local).0]
    }

    pub fn jerk_at(&self, t: f64) -> [f64; 3] {
        let (seg, local) = self.locate(t);
        [seg[0].jerk(local), seg[1].jerk(local), seg[2].jerk(local)]
    }

    /// Heading along the approach axis, rad.
    pub fn yaw(&self) -> f64 {
        self.approach_axis[1].atan2(self.approach_axis[0])
    }

    /// Signed distance of `p` past the grasp point along the approach axis.
    pub fn along_track(&self, p: [f64; 3]) -> f64 {
        (p[0] - self.grasp_point[0]) * self.approach_axis[0] + (p[1] - self.grasp_point[1]) * self.approach_axis[1]
    }

    /// Signed horizontal offset of `p` to the left of the approach axis.
    pub fn cross_track(&self, p: [f64; 3]) -> f64 {
        -(p[0] - self.grasp_point[0]) * self.approach_axis[1] + (p[1] - self.grasp_point[1]) * self.approach_axis[0]
    }

    pub fn setpoint_at(&self, t: f64) -> SetpointMsg {
        let s = self.state_at(t);
        SetpointMsg {
            position: [s[0].p, s[1].p, s[2].p],
            velocity: [s[0].v, s[1].v, s[2].v],
            acceleration: [s[0].a, s[1].a, s[2].a],
            yaw: self.yaw(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, TrajError> {
        let plan: Self = serde_json::from_str(text).map_err(|e| TrajError::Json(e.to_string()))?;
        if plan.segments.is_empty() {
            return Err(TrajError::Degenerate("plan has no segments"));
        }
        Ok(plan)
    }
}
