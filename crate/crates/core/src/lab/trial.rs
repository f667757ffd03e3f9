use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::config::TrialConfig;
use super::metrics::{average_grasp_velocity, min_speed_near, WINDOW_HALF_LENGTH};
use super::LabError;
use crate::bus::{LocalRegistry, Participant, QosPolicy, QueueSubscriber, TypedPublisher};
use crate::messages::{GripperCmdMsg, GripperState, MissionCmdMsg, MissionVerb, PoseMsg, SetpointMsg};
use crate::mission::{
    ContactTracker, GraspMonitor, GraspOutcome, MissionController, MissionOutput, MissionPhase, ObjectCatalog,
};
use crate::simsuite::{
    Disturbances, Estimator, EventRecord, LateralNoise, LogRecord, Mocap, RigidBodyState, TraceSample, Vehicle,
};

pub const POSE_TOPIC: &str = "pose/drone";
pub const SETPOINT_TOPIC: &str = "setpoint/drone";
pub const GRIPPER_TOPIC: &str = "gripper/cmd";
pub const MISSION_TOPIC: &str = "mission/cmd";

/// Bus domains available to trials.
const DOMAINS: u32 = 233;

/// Time simulated after the plan ends, s.
const TAIL: f64 = 0.3;
/// Further time allowed for reaching the far end of the window, s.
const MAX_EXTENSION: f64 = 2.0;
/// Give up if the swoop has not started by then, s.
const START_TIMEOUT: f64 = 10.0;

const SEED_LATERAL: u64 = 0x6c61_7465_7261_6c00;

/// One attempt, summarized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub object: String,
    pub seed: u64,
    /// `None` if the fingers never closed.
    pub outcome: Option<GraspOutcome>,
    pub success: bool,
    pub average_grasp_velocity: Option<f64>,
    pub min_speed: Option<f64>,
    /// Closed commands sent during the attempt.
    pub closed_commands: u32,
    pub trigger_distance: Option<f64>,
    pub final_phase: MissionPhase,
    /// Simulation fault that ended the attempt early.
    pub fault: Option<String>,
    /// Where the JSONL log was written, if it was.
    pub log: Option<String>,
}

/// A trial with its traces.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub record: TrialRecord,
    /// True state at every rate-loop tick.
    pub trace: Vec<TraceSample>,
    /// Present when the trial config asked for it.
    pub log: Vec<LogRecord>,
    pub object_position: [f64; 3],
    pub approach_axis: [f64; 2],
    /// Plan start in simulation time.
    pub plan_start: Option<f64>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `index` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

fn to_ns(t: f64) -> u64 {
    (t * 1e9).round() as u64
}

fn from_ns(ns: u64) -> f64 {
    ns as f64 * 1e-9
}

struct Nodes {
    // Declared last so endpoints drop before their participants.
    pose_pub: TypedPublisher<PoseMsg>,
    setpoint_pub: TypedPublisher<SetpointMsg>,
    gripper_pub: TypedPublisher<GripperCmdMsg>,
    mission_pub: TypedPublisher<MissionCmdMsg>,
    drone_pose: QueueSubscriber,
    drone_setpoint: QueueSubscriber,
    drone_gripper: QueueSubscriber,
    offboard_pose: QueueSubscriber,
    offboard_mission: QueueSubscriber,
    _participants: [Participant; 4],
}

fn wire(domain: u32) -> Result<Nodes, LabError> {
    let reg = LocalRegistry::new();
    let mocap = Participant::local("mocap", domain, &reg)?;
    let drone = Participant::local("drone", domain, &reg)?;
    let offboard = Participant::local("offboard", domain, &reg)?;
    let operator = Participant::local("operator", domain, &reg)?;
    let stream = QosPolicy::best_effort(4);
    let command = QosPolicy::reliable(16, 10);
    Ok(Nodes {
        pose_pub: mocap.advertise_msg(POSE_TOPIC, stream)?,
        setpoint_pub: offboard.advertise_msg(SETPOINT_TOPIC, stream)?,
        gripper_pub: offboard.advertise_msg(GRIPPER_TOPIC, command)?,
        mission_pub: operator.advertise_msg(MISSION_TOPIC, command)?,
        drone_pose: drone.subscribe_queue_msg::<PoseMsg>(POSE_TOPIC, stream)?,
        drone_setpoint: drone.subscribe_queue_msg::<SetpointMsg>(SETPOINT_TOPIC, stream)?,
        drone_gripper: drone.subscribe_queue_msg::<GripperCmdMsg>(GRIPPER_TOPIC, command)?,
        offboard_pose: offboard.subscribe_queue_msg::<PoseMsg>(POSE_TOPIC, stream)?,
        offboard_mission: offboard.subscribe_queue_msg::<MissionCmdMsg>(MISSION_TOPIC, command)?,
        _participants: [mocap, drone, offboard, operator],
    })
}

fn event(t: f64, name: &str, data: serde_json::Value) -> LogRecord {
    LogRecord::Event(EventRecord {
        t,
        event: name.to_string(),
        data,
    })
}

/// Runs attempt `index` end to end and returns its record.
pub fn run_trial(cfg: &TrialConfig, catalog: &ObjectCatalog, index: u64) -> Result<TrialRecord, LabError> {
    Ok(run_trial_detailed(cfg, catalog, index)?.record)
}

/// Like [`run_trial`], keeping the true-state trace and optional log.
///
/// Motion capture, drone and offboard station are separate bus
/// participants on a private in-process registry; all traffic between them
/// goes through the bus.
pub fn run_trial_detailed(cfg: &TrialConfig, catalog: &ObjectCatalog, index: u64) -> Result<TrialRun, LabError> {
    let lab = cfg.effective_lab()?;
    let object = catalog.get(&cfg.object)?.clone();
    let seed = trial_seed(cfg.seed, index);
    let grasp_point = lab.scene.object_center(&object);
    let axis = [1.0, 0.0];

    let mut mission = MissionController::new(
        object.name.clone(),
        grasp_point,
        axis,
        lab.swoop.clone(),
        lab.gripper.clone(),
        lab.mission.clone(),
    )?;
    let start = RigidBodyState::at_rest(Vector3::from(mission.approach_point()));

    let sim = &lab.sim;
    let mut vehicle = Vehicle::new(sim, start);
    let mut mocap = Mocap::with_seed(sim.mocap.clone(), seed);
    let mut lateral = sim.lateral.enabled.then(|| LateralNoise::new(&sim.lateral, seed ^ SEED_LATERAL));
    let mut offboard_est = Estimator::initialized(sim.estimator.clone(), &start, 0.0);
    let tracker = ContactTracker::new(object.clone(), lab.gripper.clone(), grasp_point, axis);
    let mut monitor = GraspMonitor::new(tracker, &lab.gripper);

    let domain = (cfg.domain_base + (index % u64::from(DOMAINS)) as u32) % DOMAINS;
    let nodes = wire(domain)?;
    nodes
        .mission_pub
        .publish_at(&MissionCmdMsg::new(MissionVerb::ExecuteSwoop, object.name.clone()), 0)?;

    let dt = vehicle.dt();
    let (_, pos_div) = sim.gains.loop_rates.dividers();
    let mocap_div = u64::from(sim.gains.loop_rates.rate_hz / sim.mocap.rate_hz);
    let stale_after = lab.mission.stale_after;
    let max_ticks = ((START_TIMEOUT + lab.swoop.window_duration() + TAIL + MAX_EXTENSION) / dt).ceil() as u64;

    let mut trace = Vec::with_capacity(max_ticks as usize + 1);
    let mut log = Vec::new();
    let mut drone_sp: Option<SetpointMsg> = None;
    let mut closed_commands = 0u32;
    let mut trigger_distance = None;
    let mut fault = None;
    let mut reached_end = false;

    for k in 0..max_ticks {
        let t = k as f64 * dt;

        if k % mocap_div == 0 {
            mocap.capture(vehicle.state(), t);
        }
        let mut pose_sent = false;
        while let Some(s) = mocap.pop_delivered(t) {
            nodes.pose_pub.publish_at(&s.pose, to_ns(s.sample_time))?;
            pose_sent = true;
        }
        // Local delivery is synchronous, so the queues only change on ticks
        // that publish.
        if pose_sent {
            while let Some(d) = nodes.drone_pose.try_recv_msg::<PoseMsg>() {
                let d = d?;
                vehicle.on_pose(from_ns(d.timestamp_ns), &d.msg);
            }
        }

        if k % pos_div == 0 {
            while let Some(d) = nodes.offboard_pose.try_recv_msg::<PoseMsg>() {
                let d = d?;
                offboard_est.update(from_ns(d.timestamp_ns), &d.msg, t);
            }
            let est = offboard_est
                .predict(t)
                .filter(|_| offboard_est.age(t).is_some_and(|a| a <= stale_after));
            let mut out = MissionOutput::default();
            while let Some(d) = nodes.offboard_mission.try_recv_msg::<MissionCmdMsg>() {
                let d = d?;
                let r = mission.command(&d.msg, t, est.as_ref())?;
                merge(&mut out, r);
            }
            merge(&mut out, mission.advance(t, est.as_ref()));
            if let Some(g) = out.gripper {
                if g.state == GripperState::Closed {
                    closed_commands += 1;
                    trigger_distance = out.trigger_distance;
                }
                nodes.gripper_pub.publish_at(&g, to_ns(t))?;
            }
            if let Some(sp) = out.setpoint {
                nodes.setpoint_pub.publish_at(&sp, to_ns(t))?;
            }
            if cfg.record_log {
                for (from, to) in &out.transitions {
                    log.push(event(t, "phase", serde_json::json!({"from": from, "to": to})));
                }
                if let Some(g) = out.gripper {
                    log.push(event(t, "gripper", serde_json::json!({"state": g.state, "distance": out.trigger_distance})));
                }
            }

            while let Some(d) = nodes.drone_setpoint.try_recv_msg::<SetpointMsg>() {
                drone_sp = Some(d?.msg);
            }
            if let Some(mut sp) = drone_sp {
                if let Some(l) = lateral.as_mut() {
                    let off = l.step(dt * pos_div as f64);
                    sp.position[0] -= off * axis[1];
                    sp.position[1] += off * axis[0];
                }
                vehicle.set_setpoint(sp);
            }
            while let Some(d) = nodes.drone_gripper.try_recv_msg::<GripperCmdMsg>() {
                if d?.msg.state == GripperState::Closed {
                    monitor.command_closed(t);
                }
            }
        }

        let sample = vehicle.trace_sample();
        trace.push(sample);
        let m = monitor.step(&sample);
        if let Some(mass) = m.attach {
            vehicle.attach_payload(mass)?;
            if cfg.record_log {
                log.push(event(t, "payload_attached", serde_json::json!({"mass": mass})));
            }
        }
        let p = vehicle.state().position;
        let rotor_z = p.z + vehicle.params().rotor_height;
        let dist = Disturbances {
            external_force: Vector3::from(m.force),
            ground_clearance: sim
                .ground_effect
                .enabled
                .then(|| rotor_z - lab.scene.surface_height(p.x, p.y)),
        };
        let pos_tick = vehicle.is_position_tick();
        if let Err(e) = vehicle.step(&dist) {
            fault = Some(e.to_string());
            break;
        }
        if cfg.record_log && pos_tick {
            log.push(LogRecord::Tick(vehicle.tick_record(t)));
        }

        if let Some(t0) = mission.plan_start() {
            let end = t0 + lab.swoop.window_duration();
            let along = (p.x - grasp_point[0]) * axis[0] + (p.y - grasp_point[1]) * axis[1];
            reached_end |= along >= WINDOW_HALF_LENGTH;
            if (t >= end + TAIL && reached_end) || t >= end + MAX_EXTENSION {
                trace.push(vehicle.trace_sample());
                break;
            }
        } else if t >= START_TIMEOUT || mission.phase() == MissionPhase::Aborted {
            break;
        }
    }

    let outcome = monitor.tracker().outcome();
    let plan_start = mission.plan_start();
    let min_speed = match (monitor.closure_time(), plan_start, mission.plan()) {
        (Some(tc), _, _) => min_speed_near(&trace, tc),
        (None, Some(t0), Some(plan)) => min_speed_near(&trace, t0 + plan.grasp_time),
        _ => None,
    };
    let avg = plan_start.and_then(|_| average_grasp_velocity(&trace, grasp_point, axis).ok());
    let record = TrialRecord {
        trial_id: index,
        object: object.name.clone(),
        seed,
        success: outcome.is_some_and(|o| o.success),
        outcome,
        average_grasp_velocity: avg,
        min_speed,
        closed_commands,
        trigger_distance,
        final_phase: mission.phase(),
        fault,
        log: None,
    };
    Ok(TrialRun {
        record,
        trace,
        log,
        object_position: grasp_point,
        approach_axis: axis,
        plan_start,
    })
}

fn merge(into: &mut MissionOutput, from: MissionOutput) {
    if from.setpoint.is_some() {
        into.setpoint = from.setpoint;
    }
    if from.gripper.is_some() {
        into.gripper = from.gripper;
        into.trigger_distance = from.trigger_distance.or(into.trigger_distance);
    }
    into.transitions.extend(from.transitions);
}
