//! Per-trial error, time, length and speed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::paths::Path;
use crate::sim::TrialTrace;

/// Number of curvilinear abscissae the error is averaged over.
pub const ERROR_SAMPLES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trace has no samples")]
    EmptyTrace,
    #[error("trace lasts zero seconds")]
    ZeroDuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    #[serde(rename = "error_m")]
    pub error: f64,
    #[serde(rename = "time_s")]
    pub time: f64,
    #[serde(rename = "length_m")]
    pub length: f64,
    #[serde(rename = "speed_m_per_s")]
    pub speed: f64,
    /// False when the trace did not reach the end of the path.
    pub complete: bool,
}

/// Mean of `|y_d|` at `count` equally spaced abscissae, each taking the
/// trace sample whose projection abscissa is nearest.
///
/// `samples` are `(s, |y_d|)` with non-decreasing `s`.
pub fn sampled_error(samples: &[(f64, f64)], total_length: f64, count: usize) -> f64 {
    debug_assert!(!samples.is_empty() && count > 0);
    let mut i = 0;
    let mut sum = 0.0;
    for k in 0..count {
        let target = (k as f64 + 0.5) * total_length / count as f64;
        // abscissae are sorted, so the nearest index only moves forward
        while i + 1 < samples.len()
            && (samples[i + 1].0 - target).abs() <= (samples[i].0 - target).abs()
        {
            i += 1;
        }
        sum += samples[i].1;
    }
    sum / count as f64
}

/// Metrics of one trial. The lateral error is re-derived from the poses by
/// forward-windowed projection onto `path`.
pub fn compute_metrics(trace: &TrialTrace, path: &Path) -> Result<TrialMetrics, MetricsError> {
    let first = trace.samples.first().ok_or(MetricsError::EmptyTrace)?;
    let time = trace.samples.last().map_or(0.0, |s| s.t) - first.t;
    if !(time > 0.0) {
        return Err(MetricsError::ZeroDuration);
    }

    let mut s_prev = 0.0;
    let projected: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .map(|sample| {
            let fs = path.project_forward(&sample.pose, s_prev);
            s_prev = fs.s_star;
            (fs.s_star, fs.y_d.abs())
        })
        .collect();
    let error = sampled_error(&projected, path.total_length(), ERROR_SAMPLES);

    let length = trace
        .samples
        .windows(2)
        .map(|w| (w[1].pose.position() - w[0].pose.position()).norm())
        .sum::<f64>();

    Ok(TrialMetrics {
        error,
        time,
        length,
        speed: length / time,
        complete: trace.complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use crate::paths::{make_study_path, StudyShape};
    use crate::sim::{GuidanceCue, GuidanceMode, TraceSample};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn trace_of(poses: impl IntoIterator<Item = (f64, Pose)>) -> TrialTrace {
        TrialTrace {
            mode: GuidanceMode::Haptic,
            path_id: "test".into(),
            seed: 0,
            complete: true,
            samples: poses
                .into_iter()
                .map(|(t, pose)| TraceSample {
                    t,
                    pose,
                    s_star: 0.0,
                    y_d: 0.0,
                    theta_d: 0.0,
                    cue: GuidanceCue::None,
                    wheels: None,
                })
                .collect(),
        }
    }

    fn i_path() -> Path {
        make_study_path(StudyShape::I, false, Pose::origin())
    }

    #[test]
    fn on_path_at_half_meter_per_second() {
        let trace = trace_of((0..=2000).map(|k| {
            let t = k as f64 * 0.01;
            (t, Pose::new(0.5 * t, 0.0, 0.0))
        }));
        let m = compute_metrics(&trace, &i_path()).unwrap();
        assert_abs_diff_eq!(m.error, 0.0);
        assert_abs_diff_eq!(m.time, 20.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.length, 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.speed, 0.5, epsilon = 1e-9);
        assert!(m.complete);
    }

    #[test]
    fn constant_offset() {
        let trace = trace_of((0..=1000).map(|k| {
            let t = k as f64 * 0.02;
            (t, Pose::new(0.5 * t, 0.2, 0.0))
        }));
        let m = compute_metrics(&trace, &i_path()).unwrap();
        assert_abs_diff_eq!(m.error, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn empty_and_instant_traces_rejected() {
        assert_eq!(
            compute_metrics(&trace_of([]), &i_path()),
            Err(MetricsError::EmptyTrace)
        );
        assert_eq!(
            compute_metrics(&trace_of([(0.0, Pose::origin())]), &i_path()),
            Err(MetricsError::ZeroDuration)
        );
    }

    #[test]
    fn incomplete_is_flagged() {
        let mut trace = trace_of([(0.0, Pose::origin()), (1.0, Pose::new(0.4, 0.0, 0.0))]);
        trace.complete = false;
        assert!(!compute_metrics(&trace, &i_path()).unwrap().complete);
    }

    /// Smooth lateral offset along the C path, walked at constant speed.
    fn wavy_trace(path: &Path, amp: f64, waves: f64, phase: f64) -> TrialTrace {
        let n = 4000;
        let total = path.total_length();
        trace_of((0..=n).map(|k| {
            let s = total * k as f64 / n as f64;
            let p = path.point_at_clamped(s);
            let offset = amp * (1.5 + (waves * s + phase).sin());
            let normal = crate::geometry::heading(p.theta_c + std::f64::consts::FRAC_PI_2);
            let q = p.point + normal * offset;
            (k as f64 * 0.01, Pose::new(q.x, q.y, p.theta_c))
        }))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hundred_samples_match_dense_average(
            amp in 0.02f64..0.3,
            waves in 0.2f64..2.0,
            phase in 0.0f64..std::f64::consts::TAU,
        ) {
            let path = make_study_path(StudyShape::C, false, Pose::origin());
            let trace = wavy_trace(&path, amp, waves, phase);
            let coarse = compute_metrics(&trace, &path).unwrap().error;
            // dense oracle: midpoint rule over 10^4 abscissae of the same offset law
            let total = path.total_length();
            let dense = (0..10_000)
                .map(|k| {
                    let s = (k as f64 + 0.5) * total / 10_000.0;
                    amp * (1.5 + (waves * s + phase).sin())
                })
                .sum::<f64>()
                / 10_000.0;
            prop_assert!((coarse - dense).abs() <= 0.02 * dense, "{coarse} vs {dense}");
        }

        #[test]
        fn rigid_motion_invariance(
            dx in -20.0f64..20.0,
            dy in -20.0f64..20.0,
            rot in -std::f64::consts::PI..std::f64::consts::PI,
            mirrored in any::<bool>(),
        ) {
            let path = make_study_path(StudyShape::S, mirrored, Pose::origin());
            let trace = wavy_trace(&path, 0.1, 1.3, 0.4);
            let base = compute_metrics(&trace, &path).unwrap();

            let g = Pose::new(dx, dy, rot);
            let moved_path = path.transformed(&g);
            let mut moved = trace.clone();
            for s in &mut moved.samples {
                s.pose = g.compose(&s.pose);
            }
            let m = compute_metrics(&moved, &moved_path).unwrap();
            prop_assert!((m.error - base.error).abs() < 1e-9);
            prop_assert!((m.time - base.time).abs() < 1e-9);
            prop_assert!((m.length - base.length).abs() < 1e-9);
            prop_assert!((m.speed - base.speed).abs() < 1e-9);
        }
    }
}
