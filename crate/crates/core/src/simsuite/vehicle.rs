use nalgebra::Vector3;

use super::control::{position_ctl, AttitudeController, AttitudeTarget, RateController};
use super::dynamics::{step_dynamics, Disturbances, Mixer, RigidBodyState};
use super::estimator::Estimator;
use super::lateral::LateralNoise;
use super::log::{JsonlWriter, LogRecord, StateRecord, TickRecord, TraceSample};
use super::mocap::Mocap;
use super::params::{GainSet, SimConfig, VehicleParams};
use super::SimError;
use crate::messages::{PoseMsg, SetpointMsg};

/// How many times each loop has run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoopCounts {
    pub position: u64,
    pub attitude: u64,
    pub rate: u64,
}

/// Simulated quadrotor with its onboard autopilot.
///
/// Every `step` advances one rate-loop tick. The attitude and position
/// loops run on fixed tick dividers, so the schedule is exact rather than
/// clock-driven.
#[derive(Debug, Clone)]
pub struct Vehicle {
    params: VehicleParams,
    gains: GainSet,
    mixer: Mixer,
    state: RigidBodyState,
    estimator: Estimator,
    estimate: RigidBodyState,
    attitude: AttitudeController,
    rate: RateController,
    setpoint: SetpointMsg,
    target: AttitudeTarget,
    rate_sp: Vector3<f64>,
    motors: [f64; 4],
    tick: u64,
    dt: f64,
    att_div: u64,
    pos_div: u64,
    controller_mass: f64,
    counts: LoopCounts,
}

impl Vehicle {
    /// A vehicle at `initial`, holding that position.
    pub fn new(cfg: &SimConfig, initial: RigidBodyState) -> Self {
        let (att_div, pos_div) = cfg.gains.loop_rates.dividers();
        let yaw = heading(&initial.orientation);
        Self {
            params: cfg.vehicle.clone(),
            gains: cfg.gains.clone(),
            mixer: Mixer::new(&cfg.vehicle),
            state: initial,
            estimator: Estimator::initialized(cfg.estimator.clone(), &initial, 0.0),
            estimate: initial,
            attitude: AttitudeController::default(),
            rate: RateController::default(),
            setpoint: SetpointMsg::hold(initial.position.into(), yaw),
            target: AttitudeTarget {
                orientation: initial.orientation,
                thrust: cfg.vehicle.hover_thrust(),
                saturated: false,
            },
            rate_sp: Vector3::zeros(),
            motors: [cfg.vehicle.hover_thrust() / 4.0; 4],
            tick: 0,
            dt: cfg.dt(),
            att_div,
            pos_div,
            controller_mass: cfg.vehicle.mass,
            counts: LoopCounts::default(),
        }
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The next `step` runs the position loop.
    pub fn is_position_tick(&self) -> bool {
        self.tick % self.pos_div == 0
    }

    pub fn state(&self) -> &RigidBodyState {
        &self.state
    }

    /// Estimate used by the most recent position-loop tick.
    pub fn estimate(&self) -> &RigidBodyState {
        &self.estimate
    }

    pub fn estimator(&self) -> &Estimator {
        &self.estimator
    }

    pub fn setpoint(&self) -> &SetpointMsg {
        &self.setpoint
    }

    pub fn set_setpoint(&mut self, sp: SetpointMsg) {
        self.setpoint = sp;
    }

    pub fn attitude_target(&self) -> &AttitudeTarget {
        &self.target
    }

    pub fn motors(&self) -> [f64; 4] {
        self.motors
    }

    pub fn counts(&self) -> LoopCounts {
        self.counts
    }

    pub fn params(&self) -> &VehicleParams {
        &self.params
    }

    pub fn controller_mass(&self) -> f64 {
        self.controller_mass
    }

    /// Mass the position loop compensates for.
    pub fn set_controller_mass(&mut self, mass: f64) {
        self.controller_mass = mass;
    }

    /// Adds payload mass to the airframe; the controller is told as well.
    pub fn attach_payload(&mut self, mass: f64) -> Result<(), SimError> {
        let total = self.params.payload + mass;
        if !(mass >= 0.0) || total > self.params.max_payload + 1e-12 {
            return Err(SimError::PayloadLimit {
                requested: total,
                limit: self.params.max_payload,
            });
        }
        self.params.payload = total;
        self.params.mass += mass;
        self.controller_mass += mass;
        Ok(())
    }

    /// Hands a motion-capture pose to the estimator.
    pub fn on_pose(&mut self, timestamp: f64, pose: &PoseMsg) -> Option<RigidBodyState> {
        self.estimator.update(timestamp, pose, self.time())
    }

    /// One rate-loop tick: controllers that are due, then dynamics.
    pub fn step(&mut self, dist: &Disturbances) -> Result<(), SimError> {
        let now = self.time();
        if self.tick % self.pos_div == 0 {
            // The estimator is seeded at construction, so this never misses.
            if let Some(est) = self.estimator.predict(now) {
                self.estimate = est;
            }
            if !self.estimate.is_finite() {
                return Err(SimError::NonFinite("state estimate"));
            }
            self.target = position_ctl(
                &self.setpoint,
                &self.estimate,
                &self.gains.position,
                &self.params,
                self.controller_mass,
            );
            self.counts.position += 1;
        }
        if self.tick % self.att_div == 0 {
            let dt_att = self.dt * self.att_div as f64;
            self.rate_sp = self.attitude.update(
                &self.target.orientation,
                &self.state.orientation,
                &self.gains.attitude,
                dt_att,
            );
            self.counts.attitude += 1;
        }
        let torque = self.rate.update(
            &self.rate_sp,
            &self.state.body_rates,
            &self.gains.rate,
            &self.params.inertia,
            self.dt,
        );
        self.counts.rate += 1;
        self.motors = self.mixer.mix(self.target.thrust, &torque);
        self.state = step_dynamics(&self.state, &self.motors, &self.params, &self.mixer, self.dt, dist)?;
        self.tick += 1;
        Ok(())
    }

    pub fn trace_sample(&self) -> TraceSample {
        TraceSample {
            t: self.time(),
            position: self.state.position.into(),
            velocity: self.state.velocity.into(),
            yaw: heading(&self.state.orientation),
        }
    }

    /// Log record for the position-loop tick at time `t`.
    pub fn tick_record(&self, t: f64) -> TickRecord {
        TickRecord {
            t,
            truth: (&self.state).into(),
            estimate: StateRecord::from(&self.estimate),
            setpoint: self.setpoint,
            motors: self.motors,
        }
    }
}

/// Yaw of the ZYX decomposition, without the roll and pitch terms.
fn heading(q: &nalgebra::UnitQuaternion<f64>) -> f64 {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z))
}

/// Vehicle plus simulated motion capture, driven by a setpoint function.
///
/// The lateral disturbance, when enabled, is added to the position
/// setpoint along `lateral_axis` at every position-loop tick.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub vehicle: Vehicle,
    mocap: Mocap,
    mocap_div: u64,
    lateral: Option<LateralNoise>,
    lateral_axis: [f64; 2],
    ground_effect: bool,
}

impl ClosedLoop {
    pub fn new(cfg: &SimConfig, initial: RigidBodyState, seed: u64) -> Self {
        let mocap_div = u64::from(cfg.gains.loop_rates.rate_hz / cfg.mocap.rate_hz);
        Self {
            vehicle: Vehicle::new(cfg, initial),
            mocap: Mocap::with_seed(cfg.mocap.clone(), seed),
            mocap_div,
            lateral: cfg
                .lateral
                .enabled
                .then(|| LateralNoise::new(&cfg.lateral, seed ^ 0x5eed_1a7e)),
            lateral_axis: [0.0, 1.0],
            ground_effect: cfg.ground_effect.enabled,
        }
    }

    pub fn set_lateral_axis(&mut self, axis: [f64; 2]) {
        self.lateral_axis = axis;
    }

    /// Advances one rate-loop tick. Returns true if the position loop ran.
    pub fn step(&mut self, setpoint: &mut dyn FnMut(f64) -> SetpointMsg) -> Result<bool, SimError> {
        let v = &mut self.vehicle;
        let now = v.time();
        if v.tick() % self.mocap_div == 0 {
            self.mocap.capture(v.state(), now);
        }
        while let Some(s) = self.mocap.pop_delivered(now) {
            v.on_pose(s.sample_time, &s.pose);
        }
        let pos_tick = v.is_position_tick();
        if pos_tick {
            let mut sp = setpoint(now);
            if let Some(l) = self.lateral.as_mut() {
                let d = l.step(v.dt() * v.pos_div as f64);
                sp.position[0] += d * self.lateral_axis[0];
                sp.position[1] += d * self.lateral_axis[1];
            }
            v.set_setpoint(sp);
        }
        let clearance = self
            .ground_effect
            .then(|| v.state().position.z + v.params().rotor_height);
        v.step(&Disturbances {
            external_force: Vector3::zeros(),
            ground_clearance: clearance,
        })?;
        Ok(pos_tick)
    }

    /// Runs for `duration` seconds, optionally logging every position tick.
    pub fn run<W: std::io::Write>(
        &mut self,
        duration: f64,
        setpoint: &mut dyn FnMut(f64) -> SetpointMsg,
        mut log: Option<&mut JsonlWriter<W>>,
    ) -> Result<(), SimError> {
        let ticks = (duration / self.vehicle.dt()).round() as u64;
        for _ in 0..ticks {
            let t = self.vehicle.time();
            let pos_tick = self.step(setpoint)?;
            if pos_tick {
                if let Some(w) = log.as_deref_mut() {
                    w.write(&LogRecord::Tick(self.vehicle.tick_record(t)))?;
                }
            }
        }
        Ok(())
    }
}
