//! Quadrotor rigid-body model.
//!
//! World frame is x forward, y left, z up. The body frame shares that
//! convention; rotors sit on an X at `arm_length` from the hub.

use nalgebra::{Matrix4, Quaternion, UnitQuaternion, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::params::{VehicleParams, GRAVITY};
use super::SimError;

pub const MAX_STEP: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// Body to world.
    pub orientation: UnitQuaternion<f64>,
    /// Body frame, rad/s.
    pub body_rates: Vector3<f64>,
}

impl RigidBodyState {
    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            body_rates: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.velocity.iter().all(|x| x.is_finite())
            && self.orientation.coords.iter().all(|x| x.is_finite())
            && self.body_rates.iter().all(|x| x.is_finite())
    }

    pub fn rotational_energy(&self, inertia: &[f64; 3]) -> f64 {
        let w = &self.body_rates;
        0.5 * (inertia[0] * w.x * w.x + inertia[1] * w.y * w.y + inertia[2] * w.z * w.z)
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Forces not produced by the rotors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Disturbances {
    /// World-frame force, N.
    pub external_force: Vector3<f64>,
    /// Rotor-plane height above the surface below, m; `None` disables
    /// ground effect.
    pub ground_clearance: Option<f64>,
}

/// Thrust multiplier near a surface: `1 / (1 − (R / 4z)²)`, held at its
/// `z = R/2` value (4/3) closer than that.
pub fn ground_effect_multiplier(z_agl: f64, rotor_radius: f64) -> f64 {
    let z = z_agl.max(rotor_radius / 2.0);
    let r = rotor_radius / (4.0 * z);
    1.0 / (1.0 - r * r)
}

/// Rotor positions `(x, y)` in units of `arm_length / √2` and spin signs.
const LAYOUT: [(f64, f64, f64); 4] = [(1.0, -1.0, 1.0), (-1.0, 1.0, 1.0), (1.0, 1.0, -1.0), (-1.0, -1.0, -1.0)];

/// X-configuration allocation between rotor thrusts and the collective
/// thrust/torque wrench.
#[derive(Debug, Clone)]
pub struct Mixer {
    allocation: Matrix4<f64>,
    inverse: Matrix4<f64>,
    max_rotor_thrust: f64,
}

impl Mixer {
    pub fn new(params: &VehicleParams) -> Self {
        let d = params.arm_length / std::f64::consts::SQRT_2;
        let k = params.yaw_moment_coeff;
        let mut allocation = Matrix4::zeros();
        for (i, &(x, y, s)) in LAYOUT.iter().enumerate() {
            allocation[(0, i)] = 1.0;
            allocation[(1, i)] = y * d;
            allocation[(2, i)] = -x * d;
            allocation[(3, i)] = s * k;
        }
        let inverse = allocation.try_inverse().expect("X layout is invertible");
        Self {
            allocation,
            inverse,
            max_rotor_thrust: params.max_thrust / 4.0,
        }
    }

    /// Rotor thrusts for a collective thrust and body torque, each clamped
    /// to `[0, max_thrust / 4]`.
    pub fn mix(&self, thrust: f64, torque: &Vector3<f64>) -> [f64; 4] {
        let f = self.inverse * Vector4::new(thrust, torque.x, torque.y, torque.z);
        let m = self.max_rotor_thrust;
        [f[0].clamp(0.0, m), f[1].clamp(0.0, m), f[2].clamp(0.0, m), f[3].clamp(0.0, m)]
    }

    pub fn wrench(&self, thrusts: &[f64; 4]) -> (f64, Vector3<f64>) {
        let w = self.allocation * Vector4::from(*thrusts);
        (w[0], Vector3::new(w[1], w[2], w[3]))
    }

    pub fn max_rotor_thrust(&self) -> f64 {
        self.max_rotor_thrust
    }
}

/// Advances the rigid body by `dt`.
///
/// Translation uses semi-implicit Euler with gravity, linear drag and the
/// ground-effect-scaled rotor thrust. Body rates use the implicit midpoint
/// rule, which keeps torque-free rotational energy constant.
pub fn step_dynamics(
    state: &RigidBodyState,
    thrusts: &[f64; 4],
    params: &VehicleParams,
    mixer: &Mixer,
    dt: f64,
    dist: &Disturbances,
) -> Result<RigidBodyState, SimError> {
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(SimError::InvalidStep(dt));
    }
    if thrusts.iter().any(|f| !f.is_finite()) {
        return Err(SimError::NonFinite("rotor thrust"));
    }
    let ge = dist
        .ground_clearance
        .map_or(1.0, |h| ground_effect_multiplier(h, params.rotor_radius));
    let (thrust, torque) = mixer.wrench(thrusts);
    let (thrust, torque) = (thrust * ge, torque * ge);

    let m = params.mass;
    let body_z = state.orientation * Vector3::z();
    let force = body_z * thrust + dist.external_force - state.velocity * (m * params.drag_coeff)
        + Vector3::new(0.0, 0.0, -m * GRAVITY);
    let velocity = state.velocity + force * (dt / m);
    let position = state.position + velocity * dt;

    let inertia = Vector3::from(params.inertia);
    let w0 = state.body_rates;
    let mut w1 = w0;
    for _ in 0..4 {
        let wm = (w0 + w1) * 0.5;
        let gyro = wm.cross(&inertia.component_mul(&wm));
        let next = w0 + (torque - gyro).component_div(&inertia) * dt;
        let converged = next == w1;
        w1 = next;
        if converged {
            break;
        }
    }
    let wm = (w0 + w1) * 0.5;
    let orientation = UnitQuaternion::new_normalize((state.orientation * rotation_increment(&(wm * dt))).into_inner());

    let next = RigidBodyState {
        position,
        velocity,
        orientation,
        body_rates: w1,
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(SimError::NonFinite("rigid-body state"))
    }
}

/// `exp` of the rotation vector `phi`. Below 0.02 rad the truncated
/// series is exact to double precision and skips the trig calls.
fn rotation_increment(phi: &Vector3<f64>) -> UnitQuaternion<f64> {
    let h2 = phi.norm_squared() * 0.25;
    if h2 < 1e-4 {
        let sinc = 1.0 - h2 / 6.0 * (1.0 - h2 / 20.0 * (1.0 - h2 / 42.0));
        let cos = 1.0 - h2 / 2.0 * (1.0 - h2 / 12.0 * (1.0 - h2 / 30.0));
        let v = phi * (0.5 * sinc);
        UnitQuaternion::new_unchecked(Quaternion::new(cos, v.x, v.y, v.z))
    } else {
        UnitQuaternion::from_scaled_axis(*phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simsuite::SimConfig;

    fn params() -> VehicleParams {
        SimConfig::default().vehicle
    }

    #[test]
    fn ground_effect_values() {
        let r = 0.127;
        assert!((ground_effect_multiplier(r, r) - 16.0 / 15.0).abs() < 1e-12);
        assert!((ground_effect_multiplier(1000.0 * r, r) - 1.0).abs() < 1e-6);
        assert_eq!(ground_effect_multiplier(r / 4.0, r), ground_effect_multiplier(r / 2.0, r));
        assert!((ground_effect_multiplier(r / 2.0, r) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn small_rotation_series_matches_trig() {
        for phi in [
            Vector3::new(1e-9, 0.0, 0.0),
            Vector3::new(0.003, -0.001, 0.002),
            Vector3::new(0.0, 0.0199, 0.0),
            Vector3::new(0.012, 0.011, -0.01),
        ] {
            let a = rotation_increment(&phi);
            let b = UnitQuaternion::from_scaled_axis(phi);
            assert!((a.coords - b.coords).norm() < 2e-16, "{phi:?}");
        }
    }

    #[test]
    fn mixer_round_trip() {
        let p = params();
        let mixer = Mixer::new(&p);
        let torque = Vector3::new(0.1, -0.2, 0.03);
        let f = mixer.mix(15.0, &torque);
        let (t, tau) = mixer.wrench(&f);
        assert!((t - 15.0).abs() < 1e-12);
        assert!((tau - torque).norm() < 1e-12);
        let hover = mixer.mix(p.hover_thrust(), &Vector3::zeros());
        for f in hover {
            assert!((f - p.hover_thrust() / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixer_signs() {
        let mixer = Mixer::new(&params());
        // Positive roll torque needs more thrust on the left (+y) rotors.
        let f = mixer.mix(10.0, &Vector3::new(0.2, 0.0, 0.0));
        assert!(f[1] > f[0] && f[2] > f[3]);
        // Positive pitch torque (about +y) pushes the nose down: rear rotors work harder.
        let f = mixer.mix(10.0, &Vector3::new(0.0, 0.2, 0.0));
        assert!(f[1] > f[2] && f[3] > f[0]);
    }

    #[test]
    fn rejects_large_step() {
        let p = params();
        let s = RigidBodyState::at_rest(Vector3::zeros());
        let r = step_dynamics(&s, &[0.0; 4], &p, &Mixer::new(&p), 0.003, &Disturbances::default());
        assert!(matches!(r, Err(SimError::InvalidStep(_))));
    }
}
