//! Vehicle motion models: the unicycle, the front-steered half-car, the
//! Ackermann split between the two front wheels and the stepper-driven
//! wheel position servo.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pose;

/// Below this yaw rate the straight-line update is used.
const STRAIGHT_OMEGA: f64 = 1e-9;
/// Margin kept from +-pi/2 by any usable steering angle.
const SATURATION_MARGIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("steering angle {0} rad is at or beyond the +-pi/2 limit")]
    SteeringSaturated(f64),
}

/// Front-steered chassis dimensions and wheel servo resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteeredGeometry {
    /// Distance between rear axle and steered front wheels.
    #[serde(rename = "wheelbase_m")]
    pub wheelbase: f64,
    #[serde(rename = "track_width_m")]
    pub track_width: f64,
    pub motor_steps_per_rev: u32,
    /// Motor turns per wheel turn.
    pub gear_ratio: u32,
}

impl Default for SteeredGeometry {
    fn default() -> Self {
        Self {
            wheelbase: 0.6,
            track_width: 0.5,
            motor_steps_per_rev: 400,
            gear_ratio: 4,
        }
    }
}

impl SteeredGeometry {
    pub fn steps_per_wheel_rev(&self) -> u32 {
        self.motor_steps_per_rev * self.gear_ratio
    }

    /// Angular size of one servo step.
    pub fn step_pitch(&self) -> f64 {
        2.0 * PI / self.steps_per_wheel_rev() as f64
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.wheelbase > 0.0) {
            return Err("wheelbase_m must be > 0".into());
        }
        if !(self.track_width > 0.0) {
            return Err("track_width_m must be > 0".into());
        }
        if self.steps_per_wheel_rev() == 0 {
            return Err("motor_steps_per_rev and gear_ratio must be >= 1".into());
        }
        Ok(())
    }
}

/// Pose plus the current angles of the two steered wheels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub pose: Pose,
    pub phi_left: f64,
    pub phi_right: f64,
}

impl VehicleState {
    pub fn straight(pose: Pose) -> Self {
        Self {
            pose,
            phi_left: 0.0,
            phi_right: 0.0,
        }
    }
}

/// Integrates the unicycle exactly over `dt` for constant `v` and `omega`.
pub fn step_unicycle(pose: &Pose, v: f64, omega: f64, dt: f64) -> Pose {
    debug_assert!(dt > 0.0, "dt must be positive");
    let theta = pose.theta;
    if omega.abs() < STRAIGHT_OMEGA {
        return Pose::new(
            pose.x + v * dt * theta.cos(),
            pose.y + v * dt * theta.sin(),
            theta,
        );
    }
    let radius = v / omega;
    let theta_next = theta + omega * dt;
    Pose::new(
        pose.x + radius * (theta_next.sin() - theta.sin()),
        pose.y - radius * (theta_next.cos() - theta.cos()),
        theta_next,
    )
}

/// Path curvature produced by one wheel at angle `phi` mounted at lateral
/// offset `lateral` (left positive): the reciprocal of the distance along the
/// rear axle to where the wheel's axis crosses it.
fn wheel_curvature(phi: f64, lateral: f64, wheelbase: f64) -> Result<f64, KinematicsError> {
    let (s, c) = phi.sin_cos();
    let denom = wheelbase * c + lateral * s;
    if denom.abs() < 1e-12 {
        return Err(KinematicsError::SteeringSaturated(phi));
    }
    Ok(s / denom)
}

/// Equivalent half-car steering angle of a pair of wheel angles, taken from
/// the mean of the two per-wheel turn curvatures. Exact inverse of
/// [`ackermann_split`] when the wheels agree.
pub fn effective_steering(
    phi_left: f64,
    phi_right: f64,
    geometry: &SteeredGeometry,
) -> Result<f64, KinematicsError> {
    let half_track = geometry.track_width / 2.0;
    let mean = 0.5 * (phi_left + phi_right);
    if mean.abs() >= FRAC_PI_2 - SATURATION_MARGIN {
        return Err(KinematicsError::SteeringSaturated(mean));
    }
    let left = wheel_curvature(phi_left, half_track, geometry.wheelbase)?;
    let right = wheel_curvature(phi_right, -half_track, geometry.wheelbase)?;
    let phi = (geometry.wheelbase * 0.5 * (left + right)).atan();
    if phi.abs() >= FRAC_PI_2 - SATURATION_MARGIN {
        return Err(KinematicsError::SteeringSaturated(phi));
    }
    Ok(phi)
}

/// Advances the front-steered vehicle with yaw rate `tan(phi)/L * v`.
pub fn step_steered(
    state: &VehicleState,
    v: f64,
    geometry: &SteeredGeometry,
    dt: f64,
) -> Result<VehicleState, KinematicsError> {
    let phi = effective_steering(state.phi_left, state.phi_right, geometry)?;
    let omega = phi.tan() / geometry.wheelbase * v;
    Ok(VehicleState {
        pose: step_unicycle(&state.pose, v, omega, dt),
        ..*state
    })
}

/// Splits a half-car steering angle into left and right wheel angles whose
/// axes meet the rear axle line at a common turn center:
/// `cot(phi_left) = cot(phi) - w/(2L)`, `cot(phi_right) = cot(phi) + w/(2L)`.
pub fn ackermann_split(phi: f64, geometry: &SteeredGeometry) -> (f64, f64) {
    if phi == 0.0 {
        return (0.0, 0.0);
    }
    let t = phi.tan();
    let a = geometry.track_width / (2.0 * geometry.wheelbase);
    // atan2 keeps the inner wheel on the side of phi even past 90 degrees
    (t.atan2(1.0 - a * t), t.atan2(1.0 + a * t))
}

/// One control period of the rate-limited stepper position servo. The
/// result always lies on the step grid.
pub fn wheel_servo_step(
    current: f64,
    target: f64,
    max_rate: f64,
    dt: f64,
    geometry: &SteeredGeometry,
) -> f64 {
    debug_assert!(dt > 0.0 && max_rate > 0.0);
    let max_move = max_rate * dt;
    let next = current + (target - current).clamp(-max_move, max_move);
    let pitch = geometry.step_pitch();
    (next / pitch).round() * pitch
}
