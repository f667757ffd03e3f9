//! Fixed binary schemas for every message exchanged on the bus.
//!
//! All schemas are little-endian and packed in field order. Apart from the
//! length-prefixed strings in [`MissionCmdMsg`] and [`ParticipantInfo`], every
//! schema has a constant encoded size.
//!
//! | schema          | size (bytes)              |
//! |-----------------|---------------------------|
//! | [`PoseMsg`]     | 56                        |
//! | [`SetpointMsg`] | 80                        |
//! | [`GripperCmdMsg`] | 5                       |
//! | [`MissionCmdMsg`] | 3 + target length       |

mod codec;
pub mod golden;
mod participant;

use codec::{Reader, Writer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use participant::{Direction, Endpoint, ParticipantInfo};

/// Tolerance on the transmitted quaternion norm before decode rejects it.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

/// Norm deviations below this are left untouched so that already-unit
/// quaternions survive a round trip bit-for-bit.
const QUATERNION_RENORMALIZE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("{type_name}: expected {expected} bytes, got {actual}")]
    Length {
        type_name: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{type_name}: buffer truncated")]
    Truncated { type_name: &'static str },
    #[error("{type_name}: {extra} trailing bytes")]
    TrailingBytes { type_name: &'static str, extra: usize },
    #[error("field `{field}` is not finite")]
    NonFinite { field: &'static str },
    #[error("servo angle {centidegrees} cdeg outside [0, 18000]")]
    AngleOutOfRange { centidegrees: u32 },
    #[error("quaternion norm {norm} deviates from 1 by more than {QUATERNION_NORM_TOLERANCE}")]
    QuaternionNorm { norm: f64 },
    #[error("invalid tag {tag} for `{field}`")]
    InvalidTag { field: &'static str, tag: u8 },
    #[error("{type_name}: invalid UTF-8 in string field")]
    InvalidUtf8 { type_name: &'static str },
    #[error("`{field}` is {len} bytes, longer than a 16-bit length prefix allows")]
    TooLong { field: &'static str, len: usize },
    #[error("mission command {verb:?} requires a target id")]
    MissingTarget { verb: MissionVerb },
    #[error("unknown message type `{0}`")]
    UnknownType(String),
}

/// A schema with a registered type name and a bit-exact codec.
pub trait Message: Sized {
    /// Name used for topic hashing and the golden corpus.
    const TYPE_NAME: &'static str;

    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError>;

    fn decode(bytes: &[u8]) -> Result<Self, CodecError>;

    fn encode(&self) -> Result<Vec<u8>, CodecError> {
        let mut out = Vec::new();
        self.encode_into(&mut out)?;
        Ok(out)
    }
}

fn expect_len(type_name: &'static str, bytes: &[u8], expected: usize) -> Result<(), CodecError> {
    if bytes.len() == expected {
        Ok(())
    } else {
        Err(CodecError::Length {
            type_name,
            expected,
            actual: bytes.len(),
        })
    }
}

/// Pose of a tracked body: world-frame position and body-to-world attitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseMsg {
    /// Metres, world frame.
    pub position: [f64; 3],
    /// Unit quaternion `(w, x, y, z)`.
    pub orientation: [f64; 4],
}

impl PoseMsg {
    pub const ENCODED_LEN: usize = 56;

    pub fn new(position: [f64; 3], orientation: [f64; 4]) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn identity_at(position: [f64; 3]) -> Self {
        Self::new(position, [1.0, 0.0, 0.0, 0.0])
    }
}

impl Message for PoseMsg {
    const TYPE_NAME: &'static str = "Pose";

    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        let mut w = Writer::new(out);
        w.f64s("position", &self.position)?;
        w.f64s("orientation", &self.orientation)
    }

    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        expect_len(Self::TYPE_NAME, bytes, Self::ENCODED_LEN)?;
        let mut r = Reader::new(Self::TYPE_NAME, bytes);
        let position = r.f64x::<3>("position")?;
        let q = r.f64x::<4>("orientation")?;
        r.finish()?;
        Ok(Self {
            position,
            orientation: normalize_quaternion(q)?,
        })
    }
}

fn normalize_quaternion(q: [f64; 4]) -> Result<[f64; 4], CodecError> {
    let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    let dev = (norm - 1.0).abs();
    if dev > QUATERNION_NORM_TOLERANCE {
        return Err(CodecError::QuaternionNorm { norm });
    }
    if dev <= QUATERNION_RENORMALIZE_THRESHOLD {
        return Ok(q);
    }
    Ok(q.map(|c| c / norm))
}

/// High-level position/velocity/acceleration reference streamed at 50 Hz.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SetpointMsg {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub acceleration: [f64; 3],
    /// Radians.
    pub yaw: f64,
}

impl SetpointMsg {
    pub const ENCODED_LEN: usize = 80;

    /// Hold `position` with zero velocity and acceleration.
    pub fn hold(position: [f64; 3], yaw: f64) -> Self {
        Self {
            position,
            yaw,
            ..Self::default()
        }
    }
}

impl Message for SetpointMsg {
    const TYPE_NAME: &'static str = "Setpoint";

    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        let mut w = Writer::new(out);
        w.f64s("position", &self.position)?;
        w.f64s("velocity", &self.velocity)?;
        w.f64s("acceleration", &self.acceleration)?;
        w.f64("yaw", self.yaw)
    }

    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        expect_len(Self::TYPE_NAME, bytes, Self::ENCODED_LEN)?;
        let mut r = Reader::new(Self::TYPE_NAME, bytes);
        let msg = Self {
            position: r.f64x("position")?,
            velocity: r.f64x("velocity")?,
            acceleration: r.f64x("acceleration")?,
            yaw: r.f64("yaw")?,
        };
        r.finish()?;
        Ok(msg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GripperState {
    Open,
    Closed,
}

/// Servo command for the two gripper arms. Angles are centidegrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GripperCmdMsg {
    pub state: GripperState,
    pub angle_left: u16,
    pub angle_right: u16,
}

/// Largest servo angle in centidegrees.
pub const MAX_SERVO_CENTIDEG: u16 = 18_000;

impl GripperCmdMsg {
    pub const ENCODED_LEN: usize = 5;

    /// Build a command from angles in degrees, rounding to centidegrees.
    pub fn from_degrees(state: GripperState, left: f64, right: f64) -> Result<Self, CodecError> {
        Ok(Self {
            state,
            angle_left: to_centideg("angle_left", left)?,
            angle_right: to_centideg("angle_right", right)?,
        })
    }

    pub fn left_degrees(&self) -> f64 {
        f64::from(self.angle_left) / 100.0
    }

    pub fn right_degrees(&self) -> f64 {
        f64::from(self.angle_right) / 100.0
    }
}

fn to_centideg(field: &'static str, deg: f64) -> Result<u16, CodecError> {
    if !deg.is_finite() {
        return Err(CodecError::NonFinite { field });
    }
    let cdeg = (deg * 100.0).round();
    if !(0.0..=f64::from(MAX_SERVO_CENTIDEG)).contains(&cdeg) {
        return Err(CodecError::AngleOutOfRange {
            centidegrees: cdeg.clamp(0.0, f64::from(u32::MAX)) as u32,
        });
    }
    Ok(cdeg as u16)
}

fn check_angle(cdeg: u16) -> Result<(), CodecError> {
    if cdeg > MAX_SERVO_CENTIDEG {
        Err(CodecError::AngleOutOfRange {
            centidegrees: u32::from(cdeg),
        })
    } else {
        Ok(())
    }
}

impl Message for GripperCmdMsg {
    const TYPE_NAME: &'static str = "GripperCmd";

    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        check_angle(self.angle_left)?;
        check_angle(self.angle_right)?;
        let mut w = Writer::new(out);
        w.u8(match self.state {
            GripperState::Open => 0,
            GripperState::Closed => 1,
        });
        w.u16(self.angle_left);
        w.u16(self.angle_right);
        Ok(())
    }

    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        expect_len(Self::TYPE_NAME, bytes, Self::ENCODED_LEN)?;
        let mut r = Reader::new(Self::TYPE_NAME, bytes);
        let state = match r.u8()? {
            0 => GripperState::Open,
            1 => GripperState::Closed,
            tag => return Err(CodecError::InvalidTag { field: "state", tag }),
        };
        let angle_left = r.u16()?;
        let angle_right = r.u16()?;
        check_angle(angle_left)?;
        check_angle(angle_right)?;
        r.finish()?;
        Ok(Self {
            state,
            angle_left,
            angle_right,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MissionVerb {
    Takeoff,
    GotoObject,
    ExecuteSwoop,
    Land,
    Abort,
}

impl MissionVerb {
    const ALL: [MissionVerb; 5] = [
        MissionVerb::Takeoff,
        MissionVerb::GotoObject,
        MissionVerb::ExecuteSwoop,
        MissionVerb::Land,
        MissionVerb::Abort,
    ];

    fn tag(self) -> u8 {
        self as u8
    }

    pub fn needs_target(self) -> bool {
        matches!(self, MissionVerb::GotoObject | MissionVerb::ExecuteSwoop)
    }
}

/// High-level mission command sent from the offboard station.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissionCmdMsg {
    pub verb: MissionVerb,
    /// Tracked-body name.
    pub target_id: String,
}

impl MissionCmdMsg {
    pub fn new(verb: MissionVerb, target_id: impl Into<String>) -> Self {
        Self {
            verb,
            target_id: target_id.into(),
        }
    }

    fn validate(&self) -> Result<(), CodecError> {
        if self.verb.needs_target() && self.target_id.is_empty() {
            Err(CodecError::MissingTarget { verb: self.verb })
        } else {
            Ok(())
        }
    }
}

impl Message for MissionCmdMsg {
    const TYPE_NAME: &'static str = "MissionCmd";

    fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        self.validate()?;
        let mut w = Writer::new(out);
        w.u8(self.verb.tag());
        w.str16("target_id", &self.target_id)
    }

    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(Self::TYPE_NAME, bytes);
        let tag = r.u8()?;
        let verb = *MissionVerb::ALL
            .get(usize::from(tag))
            .ok_or(CodecError::InvalidTag { field: "verb", tag })?;
        let target_id = r.str16()?;
        r.finish()?;
        let msg = Self { verb, target_id };
        msg.validate()?;
        Ok(msg)
    }
}

/// Any schema, tagged by type name.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMessage {
    Pose(PoseMsg),
    Setpoint(SetpointMsg),
    GripperCmd(GripperCmdMsg),
    MissionCmd(MissionCmdMsg),
    ParticipantInfo(ParticipantInfo),
}

impl AnyMessage {
    pub fn type_name(&self) -> &'static str {
        match self {
            AnyMessage::Pose(_) => PoseMsg::TYPE_NAME,
            AnyMessage::Setpoint(_) => SetpointMsg::TYPE_NAME,
            AnyMessage::GripperCmd(_) => GripperCmdMsg::TYPE_NAME,
            AnyMessage::MissionCmd(_) => MissionCmdMsg::TYPE_NAME,
            AnyMessage::ParticipantInfo(_) => ParticipantInfo::TYPE_NAME,
        }
    }
}

pub fn encode_msg(msg: &AnyMessage) -> Result<Vec<u8>, CodecError> {
    match msg {
        AnyMessage::Pose(m) => m.encode(),
        AnyMessage::Setpoint(m) => m.encode(),
        AnyMessage::GripperCmd(m) => m.encode(),
        AnyMessage::MissionCmd(m) => m.encode(),
        AnyMessage::ParticipantInfo(m) => m.encode(),
    }
}

pub fn decode_msg(type_name: &str, bytes: &[u8]) -> Result<AnyMessage, CodecError> {
    Ok(match type_name {
        PoseMsg::TYPE_NAME => AnyMessage::Pose(PoseMsg::decode(bytes)?),
        SetpointMsg::TYPE_NAME => AnyMessage::Setpoint(SetpointMsg::decode(bytes)?),
        GripperCmdMsg::TYPE_NAME => AnyMessage::GripperCmd(GripperCmdMsg::decode(bytes)?),
        MissionCmdMsg::TYPE_NAME => AnyMessage::MissionCmd(MissionCmdMsg::decode(bytes)?),
        ParticipantInfo::TYPE_NAME => AnyMessage::ParticipantInfo(ParticipantInfo::decode(bytes)?),
        other => return Err(CodecError::UnknownType(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pose_layout() {
        let bytes = PoseMsg::identity_at([0.0; 3]).encode().unwrap();
        assert_eq!(bytes.len(), 56);
        assert!(bytes[..24].iter().all(|&b| b == 0));
        assert_eq!(&bytes[24..32], &[0, 0, 0, 0, 0, 0, 0xF0, 0x3F]);
        assert!(bytes[32..].iter().all(|&b| b == 0));
    }

    #[test]
    fn pose_wrong_length() {
        let bytes = PoseMsg::identity_at([1.0, 2.0, 3.0]).encode().unwrap();
        assert!(matches!(
            PoseMsg::decode(&bytes[..55]),
            Err(CodecError::Length { expected: 56, actual: 55, .. })
        ));
    }

    #[test]
    fn pose_rejects_non_finite() {
        let msg = PoseMsg::identity_at([f64::NAN, 0.0, 0.0]);
        assert_eq!(msg.encode(), Err(CodecError::NonFinite { field: "position" }));
        let mut bytes = PoseMsg::identity_at([0.0; 3]).encode().unwrap();
        bytes[0..8].copy_from_slice(&f64::INFINITY.to_le_bytes());
        assert!(matches!(PoseMsg::decode(&bytes), Err(CodecError::NonFinite { .. })));
    }

    #[test]
    fn pose_quaternion_normalized_within_tolerance() {
        let s = 1.0 + 5e-7;
        let bytes = PoseMsg::new([0.0; 3], [s, 0.0, 0.0, 0.0]).encode().unwrap();
        let q = PoseMsg::decode(&bytes).unwrap().orientation;
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);

        let bytes = PoseMsg::new([0.0; 3], [1.01, 0.0, 0.0, 0.0]).encode().unwrap();
        assert!(matches!(
            PoseMsg::decode(&bytes),
            Err(CodecError::QuaternionNorm { .. })
        ));
    }

    #[test]
    fn gripper_angle_out_of_range() {
        assert_eq!(
            GripperCmdMsg::from_degrees(GripperState::Closed, 181.0, 0.0),
            Err(CodecError::AngleOutOfRange { centidegrees: 18100 })
        );
        let raw = GripperCmdMsg {
            state: GripperState::Open,
            angle_left: 18_001,
            angle_right: 0,
        };
        assert!(raw.encode().is_err());
        assert!(GripperCmdMsg::decode(&[0, 0x51, 0x46, 0, 0]).is_err());
    }

    #[test]
    fn gripper_bad_state_tag() {
        assert_eq!(
            GripperCmdMsg::decode(&[7, 0, 0, 0, 0]),
            Err(CodecError::InvalidTag { field: "state", tag: 7 })
        );
    }

    #[test]
    fn mission_requires_target() {
        let msg = MissionCmdMsg::new(MissionVerb::ExecuteSwoop, "");
        assert!(matches!(msg.encode(), Err(CodecError::MissingTarget { .. })));
        assert!(MissionCmdMsg::new(MissionVerb::Land, "").encode().is_ok());
    }

    #[test]
    fn mission_layout() {
        let bytes = MissionCmdMsg::new(MissionVerb::ExecuteSwoop, "bottle")
            .encode()
            .unwrap();
        assert_eq!(bytes, [2, 6, 0, b'b', b'o', b't', b't', b'l', b'e']);
        assert!(MissionCmdMsg::decode(&bytes[..8]).is_err());
    }

    #[test]
    fn setpoint_size() {
        assert_eq!(SetpointMsg::hold([1.0, 2.0, 3.0], 0.5).encode().unwrap().len(), 80);
    }

    #[test]
    fn unknown_type() {
        assert_eq!(
            decode_msg("Twist", &[]),
            Err(CodecError::UnknownType("Twist".into()))
        );
    }
}
