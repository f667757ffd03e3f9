use serde::{Deserialize, Serialize};

use super::SimError;

/// The configuration file shipped with the crate.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../config/default.toml");

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Total mass including any attached payload, kg.
    pub mass: f64,
    pub inertia: [f64; 3],
    pub rotor_radius: f64,
    /// Height of the rotor plane above the vehicle reference point, m.
    pub rotor_height: f64,
    pub arm_length: f64,
    /// Sum over all rotors, N.
    pub max_thrust: f64,
    pub max_tilt_deg: f64,
    pub drag_coeff: f64,
    pub yaw_moment_coeff: f64,
    pub max_payload: f64,
    /// Payload currently attached, kg. Included in `mass`.
    #[serde(default)]
    pub payload: f64,
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            self.mass,
            self.inertia[0],
            self.inertia[1],
            self.inertia[2],
            self.rotor_radius,
            self.arm_length,
            self.max_thrust,
            self.max_tilt_deg,
        ];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(SimError::Config("vehicle mass, inertia and geometry must be positive".into()));
        }
        if self.drag_coeff < 0.0 || self.payload < 0.0 || self.max_payload < 0.0 || self.rotor_height < 0.0 {
            return Err(SimError::Config("vehicle drag and payload must be non-negative".into()));
        }
        if self.max_tilt_deg >= 90.0 {
            return Err(SimError::Config("max_tilt_deg must be below 90".into()));
        }
        Ok(())
    }

    pub fn max_tilt(&self) -> f64 {
        self.max_tilt_deg.to_radians()
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * GRAVITY
    }

    /// Steady level-flight speed limit set by tilt and drag.
    pub fn max_level_speed(&self) -> f64 {
        if self.drag_coeff == 0.0 {
            f64::INFINITY
        } else {
            GRAVITY * self.max_tilt().tan() / self.drag_coeff
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionGains {
    pub kp: [f64; 3],
    pub kd: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttitudeGains {
    pub kp: [f64; 3],
    pub kd: [f64; 3],
    pub max_rate: [f64; 3],
}

/// Body-rate PID; outputs are angular accelerations scaled by inertia.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateGains {
    pub kp: [f64; 3],
    pub ki: [f64; 3],
    pub kd: [f64; 3],
    pub integral_limit: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopRates {
    pub position_hz: u32,
    pub attitude_hz: u32,
    pub rate_hz: u32,
}

impl Default for LoopRates {
    fn default() -> Self {
        Self {
            position_hz: 50,
            attitude_hz: 500,
            rate_hz: 1000,
        }
    }
}

impl LoopRates {
    /// Rate-loop ticks per attitude tick and per position tick.
    pub fn dividers(&self) -> (u64, u64) {
        (
            u64::from(self.rate_hz / self.attitude_hz),
            u64::from(self.rate_hz / self.position_hz),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub position: PositionGains,
    pub attitude: AttitudeGains,
    pub rate: RateGains,
    #[serde(default)]
    pub loop_rates: LoopRates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MocapConfig {
    pub rate_hz: u32,
    pub position_noise_sigma: f64,
    pub latency: f64,
    pub dropout_prob: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    Hold,
    ConstantVelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub compensation_delay: f64,
    pub extrapolation: Extrapolation,
}

/// Per-attempt lateral tracking disturbance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateralNoiseConfig {
    pub enabled: bool,
    pub bias_sigma: f64,
    pub ou_sigma: f64,
    pub ou_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundEffectConfig {
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub vehicle: VehicleParams,
    pub gains: GainSet,
    pub mocap: MocapConfig,
    pub estimator: EstimatorConfig,
    pub lateral: LateralNoiseConfig,
    pub ground_effect: GroundEffectConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CONFIG_TOML).expect("shipped config parses")
    }
}

impl SimConfig {
    /// Parses the simulation sections of a config document; other sections
    /// are ignored.
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: Self = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.vehicle.validate()?;
        let r = self.gains.loop_rates;
        if r.position_hz == 0 || r.attitude_hz == 0 || r.rate_hz == 0 {
            return Err(SimError::Config("loop rates must be positive".into()));
        }
        if r.rate_hz % r.attitude_hz != 0 || r.rate_hz % r.position_hz != 0 {
            return Err(SimError::Config("attitude and position rates must divide the rate-loop rate".into()));
        }
        if r.rate_hz < 500 {
            return Err(SimError::Config("rate loop must run at 500 Hz or faster".into()));
        }
        let m = &self.mocap;
        if m.rate_hz == 0 || r.rate_hz % m.rate_hz != 0 {
            return Err(SimError::Config("mocap rate must divide the rate-loop rate".into()));
        }
        if !(0.0..=1.0).contains(&m.dropout_prob) || m.position_noise_sigma < 0.0 || m.latency < 0.0 {
            return Err(SimError::Config("mocap noise, latency and dropout must be non-negative".into()));
        }
        if !(self.estimator.compensation_delay >= 0.0) {
            return Err(SimError::Config("compensation_delay must be non-negative".into()));
        }
        let l = &self.lateral;
        if l.bias_sigma < 0.0 || l.ou_sigma < 0.0 || !(l.ou_tau > 0.0) {
            return Err(SimError::Config("lateral noise sigmas must be non-negative and tau positive".into()));
        }
        Ok(())
    }

    /// Physics and rate-loop step, s.
    pub fn dt(&self) -> f64 {
        1.0 / f64::from(self.gains.loop_rates.rate_hz)
    }

    /// Noise-free variant: no mocap noise or latency, no lateral disturbance.
    pub fn noiseless(mut self) -> Self {
        self.mocap.position_noise_sigma = 0.0;
        self.mocap.latency = 0.0;
        self.mocap.dropout_prob = 0.0;
        self.estimator.compensation_delay = 0.0;
        self.lateral.enabled = false;
        self
    }
}
