use serde::{Deserialize, Serialize};

use super::axis::JerkProfile;

/// Dense-sampling rate of the feasibility check.
pub const CHECK_RATE_HZ: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub j_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Velocity,
    Acceleration,
    Jerk,
}

/// The sample closest to, or furthest beyond, its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offender {
    pub quantity: Quantity,
    pub t: f64,
    pub value: f64,
    pub limit: f64,
}

impl Offender {
    pub fn ratio(&self) -> f64 {
        self.value.abs() / self.limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisFeasibility {
    pub pass: bool,
    pub worst: Offender,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub axes: Vec<AxisFeasibility>,
}

impl FeasibilityReport {
    pub fn pass(&self) -> bool {
        self.axes.iter().all(|a| a.pass)
    }
}

fn sample_times(duration: f64) -> impl Iterator<Item = f64> {
    let n = (duration * CHECK_RATE_HZ).floor() as usize;
    (0..=n)
        .map(|k| k as f64 / CHECK_RATE_HZ)
        .chain(std::iter::once(duration))
}

/// Checks |v|, |a| and |j| of each axis at 1 kHz plus the end point. The
/// bounds apply per axis.
pub fn check_feasibility(axes: &[JerkProfile], limits: DynamicLimits) -> FeasibilityReport {
    let axes = axes
        .iter()
        .map(|p| {
            let mut worst = Offender {
                quantity: Quantity::Velocity,
                t: 0.0,
                value: 0.0,
                limit: limits.v_max,
            };
            for t in sample_times(p.duration) {
                let (s, j) = p.sample(t);
                for (quantity, value, limit) in [
                    (Quantity::Velocity, s.v, limits.v_max),
                    (Quantity::Acceleration, s.a, limits.a_max),
                    (Quantity::Jerk, j, limits.j_max),
                ] {
                    let cand = Offender {
                        quantity,
                        t,
                        value,
                        limit,
                    };
                    if cand.ratio() > worst.ratio() {
                        worst = cand;
                    }
                }
            }
            AxisFeasibility {
                pass: worst.ratio() <= 1.0,
                worst,
            }
        })
        .collect();
    FeasibilityReport { axes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajgen::{solve_axis, AxisGoal, AxisState};

    #[test]
    fn samples_include_both_ends() {
        let ts: Vec<f64> = sample_times(0.0025).collect();
        assert_eq!(ts, vec![0.0, 0.001, 0.002, 0.0025]);
    }

    #[test]
    fn quintic_velocity_bound() {
        let p = solve_axis(AxisState::default(), AxisGoal::rest(1.0), 1.0).unwrap();
        let loose = DynamicLimits {
            v_max: 2.0,
            a_max: 100.0,
            j_max: 1000.0,
        };
        assert!(check_feasibility(&[p], loose).pass());
        let tight = DynamicLimits { v_max: 1.5, ..loose };
        let r = check_feasibility(&[p], tight);
        assert!(!r.pass());
        let w = r.axes[0].worst;
        assert_eq!(w.quantity, Quantity::Velocity);
        assert!((w.t - 0.5).abs() < 1e-12);
        assert!((w.value - 1.875).abs() < 1e-12);
    }

    #[test]
    fn zero_profile_passes() {
        let p = JerkProfile::coast(AxisState::default(), 3.0);
        let lim = DynamicLimits {
            v_max: 1e-9,
            a_max: 1e-9,
            j_max: 1e-9,
        };
        assert!(check_feasibility(&[p, p, p], lim).pass());
    }
}
