use serde::{Deserialize, Serialize};

use super::TrajError;

/// Position, velocity and acceleration along one axis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisState {
    pub p: f64,
    pub v: f64,
    pub a: f64,
}

impl AxisState {
    pub const fn new(p: f64, v: f64, a: f64) -> Self {
        Self { p, v, a }
    }

    pub const fn at_rest(p: f64) -> Self {
        Self { p, v: 0.0, a: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.v.is_finite() && self.a.is_finite()
    }
}

/// End state with optionally unconstrained components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisGoal {
    pub p: Option<f64>,
    pub v: Option<f64>,
    pub a: Option<f64>,
}

impl AxisGoal {
    pub const fn full(p: f64, v: f64, a: f64) -> Self {
        Self {
            p: Some(p),
            v: Some(v),
            a: Some(a),
        }
    }

    pub const fn rest(p: f64) -> Self {
        Self::full(p, 0.0, 0.0)
    }

    pub const fn position(p: f64) -> Self {
        Self {
            p: Some(p),
            v: None,
            a: None,
        }
    }

    pub fn is_constrained(&self) -> bool {
        self.p.is_some() || self.v.is_some() || self.a.is_some()
    }
}

impl From<AxisState> for AxisGoal {
    fn from(s: AxisState) -> Self {
        Self::full(s.p, s.v, s.a)
    }
}

/// One axis of a minimum-jerk trajectory: jerk `j(t) = α t²/2 + β t + γ`
/// on `[0, T]` from `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JerkProfile {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub duration: f64,
    pub start: AxisState,
}

/// Minimum-jerk profile from `start` to `goal` in time `t_final`.
///
/// Components of `goal` left as `None` are free; the optimum then has a
/// zero costate for them at `t_final`.
pub fn solve_axis(start: AxisState, goal: AxisGoal, t_final: f64) -> Result<JerkProfile, TrajError> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(TrajError::NonPositiveDuration(t_final));
    }
    if !goal.is_constrained() {
        return Err(TrajError::Unconstrained);
    }
    let finite_goal = [goal.p, goal.v, goal.a].iter().flatten().all(|x| x.is_finite());
    if !start.is_finite() || !finite_goal {
        return Err(TrajError::NonFinite);
    }

    let t = t_final;
    let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));
    let dp = goal.p.map(|pf| pf - start.p - start.v * t - 0.5 * start.a * t2);
    let dv = goal.v.map(|vf| vf - start.v - start.a * t);
    let da = goal.a.map(|af| af - start.a);

    let (alpha, beta, gamma) = match (dp, dv, da) {
        (Some(dp), Some(dv), Some(da)) => (
            60.0 * (t2 * da - 6.0 * t * dv + 12.0 * dp) / t5,
            -24.0 * (t2 * da - 7.0 * t * dv + 15.0 * dp) / t4,
            3.0 * (t2 * da - 8.0 * t * dv + 20.0 * dp) / t3,
        ),
        (Some(dp), Some(dv), None) => (
            -40.0 * (3.0 * t * dv - 8.0 * dp) / t5,
            8.0 * (9.0 * t * dv - 25.0 * dp) / t4,
            -4.0 * (3.0 * t * dv - 10.0 * dp) / t3,
        ),
        (Some(dp), None, Some(da)) => (
            -7.5 * (t2 * da - 6.0 * dp) / t5,
            7.5 * (t2 * da - 6.0 * dp) / t4,
            -1.5 * (t2 * da - 10.0 * dp) / t3,
        ),
        (Some(dp), None, None) => (20.0 * dp / t5, -20.0 * dp / t4, 10.0 * dp / t3),
        (None, Some(dv), Some(da)) => (0.0, 6.0 * (t * da - 2.0 * dv) / t3, -2.0 * (t * da - 3.0 * dv) / t2),
        (None, Some(dv), None) => (0.0, -3.0 * dv / t3, 3.0 * dv / t2),
        (None, None, Some(da)) => (0.0, 0.0, da / t),
        (None, None, None) => unreachable!("checked above"),
    };
    Ok(JerkProfile {
        alpha,
        beta,
        gamma,
        duration: t,
        start,
    })
}

impl JerkProfile {
    /// The profile that stays at `start` (constant acceleration) for `T`.
    pub fn coast(start: AxisState, duration: f64) -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            duration,
            start,
        }
    }

    pub fn jerk(&self, t: f64) -> f64 {
        self.alpha / 2.0 * t * t + self.beta * t + self.gamma
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        let t2 = t * t;
        self.alpha / 6.0 * t2 * t + self.beta / 2.0 * t2 + self.gamma * t + self.start.a
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let t2 = t * t;
        self.alpha / 24.0 * t2 * t2 + self.beta / 6.0 * t2 * t + self.gamma / 2.0 * t2 + self.start.a * t + self.start.v
    }

    pub fn position(&self, t: f64) -> f64 {
        let t2 = t * t;
        let t3 = t2 * t;
        self.alpha / 120.0 * t3 * t2
            + self.beta / 24.0 * t2 * t2
            + self.gamma / 6.0 * t3
            + self.start.a / 2.0 * t2
            + self.start.v * t
            + self.start.p
    }

    /// State and jerk at `t` without a range check.
    pub fn sample(&self, t: f64) -> (AxisState, f64) {
        (
            AxisState::new(self.position(t), self.velocity(t), self.acceleration(t)),
            self.jerk(t),
        )
    }

    /// State and jerk at `t ∈ [0, T]`.
    pub fn eval(&self, t: f64) -> Result<(AxisState, f64), TrajError> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(TrajError::OutOfRange {
                t,
                duration: self.duration,
            });
        }
        Ok(self.sample(t))
    }

    pub fn end_state(&self) -> AxisState {
        self.sample(self.duration).0
    }

    /// Exact integral of the squared jerk over `[0, T]`.
    pub fn cost(&self) -> f64 {
        let (a, b, g, t) = (self.alpha, self.beta, self.gamma, self.duration);
        g * g * t + b * g * t.powi(2) + (b * b + a * g) / 3.0 * t.powi(3) + a * b / 4.0 * t.powi(4)
            + a * a / 20.0 * t.powi(5)
    }
}
