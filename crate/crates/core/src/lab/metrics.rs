use serde::{Deserialize, Serialize};

use super::LabError;
use crate::simsuite::TraceSample;

/// Half length of the swoop window along the approach axis, m.
pub const WINDOW_HALF_LENGTH: f64 = 2.0;

/// Half width of the interval around closure searched for the minimum
/// speed, s.
pub const MIN_SPEED_HALF_WINDOW: f64 = 0.25;

fn along(s: &TraceSample, origin: [f64; 3], axis: [f64; 2]) -> f64 {
    (s.position[0] - origin[0]) * axis[0] + (s.position[1] - origin[1]) * axis[1]
}

/// Time at which the along-track coordinate first reaches `level`,
/// interpolated between samples.
fn first_crossing(trace: &[TraceSample], origin: [f64; 3], axis: [f64; 2], level: f64) -> Option<f64> {
    let first = trace.first()?;
    if along(first, origin, axis) >= level {
        return Some(first.t);
    }
    trace.windows(2).find_map(|w| {
        let (a, b) = (along(&w[0], origin, axis), along(&w[1], origin, axis));
        (a < level && b >= level).then(|| w[0].t + (level - a) / (b - a) * (w[1].t - w[0].t))
    })
}

/// Window length (4 m) over the time between first reaching −2 m and first
/// reaching +2 m along `axis` relative to `object`.
pub fn average_grasp_velocity(trace: &[TraceSample], object: [f64; 3], axis: [f64; 2]) -> Result<f64, LabError> {
    let h = WINDOW_HALF_LENGTH;
    let t0 = first_crossing(trace, object, axis, -h).ok_or(LabError::Window("never reached the window start"))?;
    let t1 = first_crossing(trace, object, axis, h).ok_or(LabError::Window("never reached the window end"))?;
    if t1 <= t0 {
        return Err(LabError::Window("window traversed in zero time"));
    }
    Ok(2.0 * h / (t1 - t0))
}

/// Smallest 3D speed within `±MIN_SPEED_HALF_WINDOW` of `t_c`.
pub fn min_speed_near(trace: &[TraceSample], t_c: f64) -> Option<f64> {
    trace
        .iter()
        .filter(|s| (s.t - t_c).abs() <= MIN_SPEED_HALF_WINDOW + 1e-9)
        .map(TraceSample::speed)
        .min_by(f64::total_cmp)
}

/// Sample mean and standard deviation (n − 1 denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { n, mean, std })
    }
}

/// Wilson score interval for `k` successes out of `n` at ~95%.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let center = (p + z * z / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z * z / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
