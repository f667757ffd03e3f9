//! Position, attitude and body-rate controllers of the cascade.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::dynamics::RigidBodyState;
use super::params::{AttitudeGains, PositionGains, RateGains, VehicleParams, GRAVITY};
use crate::messages::SetpointMsg;

/// Smallest collective thrust the position loop commands, as a fraction of
/// hover thrust; keeps the thrust vector pointing up.
const MIN_THRUST_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttitudeTarget {
    pub orientation: UnitQuaternion<f64>,
    /// Collective thrust, N.
    pub thrust: f64,
    /// Tilt or thrust limit was hit and the command clamped.
    pub saturated: bool,
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::from(a)
}

/// Attitude whose body z axis is `z_b` and whose heading is `yaw`.
pub fn attitude_from_thrust_dir(z_b: &Vector3<f64>, yaw: f64) -> UnitQuaternion<f64> {
    let x_c = Vector3::new(yaw.cos(), yaw.sin(), 0.0);
    let y_b = z_b.cross(&x_c);
    // z_b is kept within max_tilt of vertical, so y_b never vanishes.
    let y_b = y_b / y_b.norm();
    let x_b = y_b.cross(z_b);
    let r = Matrix3::from_columns(&[x_b, y_b, *z_b]);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r))
}

/// PD position control with acceleration and drag feed-forward.
///
/// `mass` is the mass the controller believes the vehicle has, which may
/// lag the true mass after a payload attaches.
pub fn position_ctl(
    sp: &SetpointMsg,
    est: &RigidBodyState,
    gains: &PositionGains,
    vehicle: &VehicleParams,
    mass: f64,
) -> AttitudeTarget {
    let e_p = v3(sp.position) - est.position;
    let e_v = v3(sp.velocity) - est.velocity;
    let acc = v3(sp.acceleration)
        + v3(gains.kp).component_mul(&e_p)
        + v3(gains.kd).component_mul(&e_v)
        + v3(sp.velocity) * vehicle.drag_coeff;
    let mut f = (acc + Vector3::new(0.0, 0.0, GRAVITY)) * mass;
    let mut saturated = false;

    let f_min = MIN_THRUST_FRACTION * mass * GRAVITY;
    if f.z < f_min {
        f.z = f_min;
        saturated = true;
    }
    let horizontal = f.x.hypot(f.y);
    let limit = f.z * vehicle.max_tilt().tan();
    if horizontal > limit {
        let s = limit / horizontal;
        f.x *= s;
        f.y *= s;
        saturated = true;
    }
    let mut thrust = f.norm();
    if thrust > vehicle.max_thrust {
        thrust = vehicle.max_thrust;
        saturated = true;
    }
    AttitudeTarget {
        orientation: attitude_from_thrust_dir(&(f / f.norm()), sp.yaw),
        thrust,
        saturated,
    }
}

/// Body-frame rotation vector taking `q` to `q_sp` along the shorter way
/// round.
pub fn attitude_error(q_sp: &UnitQuaternion<f64>, q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let mut c = (q.inverse() * q_sp).into_inner();
    if c.w < 0.0 {
        c = -c;
    }
    let v = c.imag();
    let n = v.norm();
    if n < 1e-2 * c.w {
        // atan(x) / x by its series; the truncation is below double precision.
        let x2 = (n / c.w) * (n / c.w);
        let k = 1.0 - x2 * (1.0 / 3.0 - x2 * (1.0 / 5.0 - x2 * (1.0 / 7.0)));
        v * (2.0 * k / c.w)
    } else {
        UnitQuaternion::new_unchecked(c).scaled_axis()
    }
}

/// Nonlinear PD on the quaternion error, producing a body-rate setpoint.
#[derive(Debug, Clone, Default)]
pub struct AttitudeController {
    prev_error: Option<Vector3<f64>>,
}

impl AttitudeController {
    pub fn update(
        &mut self,
        q_sp: &UnitQuaternion<f64>,
        q: &UnitQuaternion<f64>,
        gains: &AttitudeGains,
        dt: f64,
    ) -> Vector3<f64> {
        let e = attitude_error(q_sp, q);
        let de = self.prev_error.map_or(Vector3::zeros(), |p| (e - p) / dt);
        self.prev_error = Some(e);
        let r = v3(gains.kp).component_mul(&e) + v3(gains.kd).component_mul(&de);
        let m = v3(gains.max_rate);
        Vector3::new(r.x.clamp(-m.x, m.x), r.y.clamp(-m.y, m.y), r.z.clamp(-m.z, m.z))
    }

    pub fn reset(&mut self) {
        self.prev_error = None;
    }
}

/// Body-rate PID with a clamped integrator and derivative on the measured
/// rate. Returns body torque.
#[derive(Debug, Clone, Default)]
pub struct RateController {
    integral: Vector3<f64>,
    prev_rate: Option<Vector3<f64>>,
}

impl RateController {
    pub fn update(
        &mut self,
        rate_sp: &Vector3<f64>,
        rate: &Vector3<f64>,
        gains: &RateGains,
        inertia: &[f64; 3],
        dt: f64,
    ) -> Vector3<f64> {
        let e = rate_sp - rate;
        let lim = v3(gains.integral_limit);
        let i = self.integral + e * dt;
        self.integral = Vector3::new(i.x.clamp(-lim.x, lim.x), i.y.clamp(-lim.y, lim.y), i.z.clamp(-lim.z, lim.z));
        let d_rate = self.prev_rate.map_or(Vector3::zeros(), |p| (rate - p) / dt);
        self.prev_rate = Some(*rate);
        let cmd = v3(gains.kp).component_mul(&e) + v3(gains.ki).component_mul(&self.integral)
            - v3(gains.kd).component_mul(&d_rate);
        v3(*inertia).component_mul(&cmd)
    }

    pub fn integral(&self) -> Vector3<f64> {
        self.integral
    }

    pub fn reset(&mut self) {
        self.integral = Vector3::zeros();
        self.prev_rate = None;
    }
}
