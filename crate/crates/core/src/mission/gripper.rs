use serde::{Deserialize, Serialize};

use super::MissionError;
use crate::messages::{GripperCmdMsg, GripperState};

pub const FINGERS_PER_PAIR: u8 = 2;
pub const PAIRS: u8 = 2;

/// Servo angle of an open arm, degrees.
pub const OPEN_ANGLE_DEG: f64 = 0.0;
/// Servo angle of a closed arm, degrees.
pub const CLOSED_ANGLE_DEG: f64 = 90.0;

/// How the two finger pairs are laid out relative to the flight direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairAxis {
    /// Pairs sit one behind the other along the flight direction; in level
    /// flight both see the same lateral offset.
    Longitudinal,
    /// Pairs sit at `±pair_offset` across the flight direction.
    Lateral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripperModel {
    pub width: f64,
    pub pair_offset: f64,
    pub pair_axis: PairAxis,
    /// Time from the Closed command until the fingers are shut, s.
    pub actuation_time: f64,
    /// Horizontal distance to the object inside which closing is allowed, m.
    pub trigger_radius: f64,
    /// Horizontal stiffness of the held object before it leaves the stand.
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    /// Extra along-track travel past the object's ends before it slips, m.
    pub longitudinal_margin: f64,
}

impl Default for GripperModel {
    fn default() -> Self {
        Self {
            width: 0.06,
            pair_offset: 0.0125,
            pair_axis: PairAxis::Longitudinal,
            actuation_time: 0.2,
            trigger_radius: 0.35,
            contact_stiffness: 400.0,
            contact_damping: 8.0,
            longitudinal_margin: 0.02,
        }
    }
}

impl GripperModel {
    pub fn validate(&self) -> Result<(), MissionError> {
        if !(self.width > 0.0) {
            return Err(MissionError::InvalidGripper("width must be positive"));
        }
        if !(self.pair_offset >= 0.0 && self.pair_offset < self.width / 2.0) {
            return Err(MissionError::InvalidGripper("pair_offset must lie in [0, width/2)"));
        }
        let non_negative = [
            self.actuation_time,
            self.trigger_radius,
            self.contact_stiffness,
            self.contact_damping,
            self.longitudinal_margin,
        ];
        if non_negative.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(MissionError::InvalidGripper("timing, radius and contact terms must be non-negative"));
        }
        Ok(())
    }

    /// Lateral positions of the two pairs relative to the object center,
    /// given the gripper's lateral offset and its heading error.
    pub fn pair_positions(&self, lateral_offset: f64, yaw_error: f64) -> [f64; 2] {
        let d = match self.pair_axis {
            PairAxis::Longitudinal => self.pair_offset * yaw_error.sin(),
            PairAxis::Lateral => self.pair_offset * yaw_error.cos(),
        };
        [lateral_offset - d, lateral_offset + d]
    }

    /// Pairs that land on an object of width `object_width`.
    pub fn pairs_in_contact(&self, lateral_offset: f64, yaw_error: f64, object_width: f64) -> u8 {
        let half = object_width / 2.0;
        self.pair_positions(lateral_offset, yaw_error)
            .iter()
            .filter(|y| y.abs() <= half)
            .count() as u8
    }

    pub fn command(state: GripperState) -> GripperCmdMsg {
        let deg = match state {
            GripperState::Open => OPEN_ANGLE_DEG,
            GripperState::Closed => CLOSED_ANGLE_DEG,
        };
        GripperCmdMsg::from_degrees(state, deg, deg).expect("angles in range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grasp_both_pairs() {
        let g = GripperModel::default();
        assert_eq!(g.pairs_in_contact(0.0, 0.0, 0.14), 2);
        assert_eq!(g.pairs_in_contact(0.10, 0.0, 0.06), 0);
    }

    #[test]
    fn lateral_layout_counts_single_pairs() {
        let g = GripperModel {
            pair_axis: PairAxis::Lateral,
            ..GripperModel::default()
        };
        // Pair centres at 0.0375 and 0.0625; only the first is within 0.04.
        assert_eq!(g.pairs_in_contact(0.05, 0.0, 0.08), 1);
        // 10 cm is beyond 3 + 1.25 cm for the bottle.
        assert_eq!(g.pairs_in_contact(0.10, 0.0, 0.06), 0);
        assert_eq!(g.pairs_in_contact(0.0, 0.0, 0.06), 2);
    }

    #[test]
    fn yaw_error_splits_longitudinal_pairs() {
        let g = GripperModel::default();
        let [a, b] = g.pair_positions(0.03, 0.2);
        assert!(a < 0.03 && b > 0.03);
        assert_eq!(g.pairs_in_contact(0.03, 0.2, 0.06), 1);
    }

    #[test]
    fn commands_round_trip_angles() {
        let c = GripperModel::command(GripperState::Closed);
        assert_eq!(c.left_degrees(), CLOSED_ANGLE_DEG);
        assert_eq!(GripperModel::command(GripperState::Open).angle_right, 0);
    }

    #[test]
    fn validate_offset() {
        let g = GripperModel {
            pair_offset: 0.03,
            ..GripperModel::default()
        };
        assert!(g.validate().is_err());
        assert!(GripperModel::default().validate().is_ok());
    }
}
