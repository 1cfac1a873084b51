//! Mechanical guidance: a virtual target slides along the path and the
//! walker's front wheels are steered to track it.
//!
//! The target's progression and the heading law follow the classic
//! virtual-target path follower. Its angular velocity reference is turned
//! into a half-car steering angle, blended with the current wheel angle by
//! the corridor gate, split between the two wheels and sent to the servos.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, Pose};
use crate::guidance::{CorridorParams, GainSchedule, QuantizedGuidance, TrackingError};
use crate::kinematics::{
    ackermann_split, effective_steering, wheel_servo_step, KinematicsError, SteeredGeometry,
    VehicleState,
};
use crate::paths::{FrenetState, Path};

const SERIES_LIMIT: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteeringError {
    #[error("controller suspended: forward speed {0} m/s is not positive")]
    Suspended(f64),
    #[error("blend weight {0} outside [0, 1]")]
    BlendWeight(f64),
    #[error("invalid steering parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteeringGains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    /// Saturation of the approach angle.
    #[serde(rename = "k_delta_rad")]
    pub k_delta: f64,
}

impl Default for SteeringGains {
    fn default() -> Self {
        Self {
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            k4: 1.0,
            k_delta: 0.7,
        }
    }
}

impl SteeringGains {
    pub fn validate(&self) -> Result<(), SteeringError> {
        for (name, value) in [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
            ("k_delta_rad", self.k_delta),
        ] {
            if !(value > 0.0) {
                return Err(SteeringError::InvalidParameter(format!(
                    "{name} must be > 0, got {value}"
                )));
            }
        }
        if self.k_delta >= FRAC_PI_2 {
            return Err(SteeringError::InvalidParameter(format!(
                "k_delta_rad must be < pi/2, got {}",
                self.k_delta
            )));
        }
        Ok(())
    }
}

/// Walker coordinates in the frame of the virtual target at abscissa `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualTargetState {
    pub s: f64,
    /// Along-track offset of the walker ahead of the target.
    pub s_v: f64,
    /// Cross-track offset, positive left.
    pub y_v: f64,
    /// Walker heading relative to the path tangent at the target.
    pub theta_v: f64,
}

impl VirtualTargetState {
    pub fn from_pose(path: &Path, pose: &Pose, s: f64) -> Self {
        let s = s.clamp(0.0, path.total_length());
        let target = path.point_at_clamped(s);
        let d = pose.position() - target.point;
        let (sin_c, cos_c) = target.theta_c.sin_cos();
        Self {
            s,
            s_v: cos_c * d.x + sin_c * d.y,
            y_v: -sin_c * d.x + cos_c * d.y,
            theta_v: normalize_angle(pose.theta - target.theta_c),
        }
    }

    /// Target placed at the Frenet projection of `pose`.
    pub fn at_projection(path: &Path, pose: &Pose) -> Self {
        Self::from_pose(path, pose, path.project(pose).s_star)
    }
}

/// `delta = -K_delta tanh(y_v v)`.
pub fn approach_angle(y_v: f64, v: f64, k_delta: f64) -> f64 {
    -k_delta * (y_v * v).tanh()
}

/// `(sin a - sin b) / (a - b)`, continuous at `a == b`.
fn sin_difference_ratio(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.abs() < SERIES_LIMIT {
        // cos of the midpoint times sinc(d/2)
        let m = 0.5 * (a + b);
        m.cos() * (1.0 - d * d / 24.0)
    } else {
        (a.sin() - b.sin()) / d
    }
}

/// Rates produced by the control laws at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualTargetRates {
    pub s_dot: f64,
    pub delta: f64,
    pub delta_dot: f64,
    pub theta_v_dot: f64,
    /// Walker angular velocity reference `theta_v_dot + c(s) s_dot`.
    pub omega_ref: f64,
}

/// Evaluates the progression and heading laws for the walker at `pose`
/// with the target at `vt.s`.
pub fn virtual_target_rates(
    vt: &VirtualTargetState,
    v: f64,
    path: &Path,
    gains: &SteeringGains,
) -> Result<VirtualTargetRates, SteeringError> {
    if !(v > 0.0) {
        return Err(SteeringError::Suspended(v));
    }
    let c = path.point_at_clamped(vt.s).curvature;
    let s_dot = v * vt.theta_v.cos() + gains.k2 * vt.s_v;
    let delta = approach_angle(vt.y_v, v, gains.k_delta);
    let y_v_dot = -c * s_dot * vt.s_v + v * vt.theta_v.sin();
    let sech = 1.0 / (vt.y_v * v).cosh();
    let delta_dot = -gains.k_delta * sech * sech * v * y_v_dot;
    let err = vt.theta_v - delta;
    let theta_v_dot = delta_dot
        - gains.k4 * gains.k1 * vt.y_v * v * sin_difference_ratio(vt.theta_v, delta)
        - gains.k3 * err;
    Ok(VirtualTargetRates {
        s_dot,
        delta,
        delta_dot,
        theta_v_dot,
        omega_ref: theta_v_dot + c * s_dot,
    })
}

/// Advances the virtual target by one period and returns its new state
/// together with the angular velocity reference for the walker.
pub fn virtual_target_step(
    vt: &VirtualTargetState,
    pose: &Pose,
    v: f64,
    path: &Path,
    gains: &SteeringGains,
    dt: f64,
) -> Result<(VirtualTargetState, f64), SteeringError> {
    let current = VirtualTargetState::from_pose(path, pose, vt.s);
    let rates = virtual_target_rates(&current, v, path, gains)?;
    let next = VirtualTargetState::from_pose(path, pose, current.s + rates.s_dot * dt);
    Ok((next, rates.omega_ref))
}

/// Half-car steering angle producing `omega_ref` at speed `v`, clamped to
/// `+-max_steering`.
pub fn steering_from_omega(
    omega_ref: f64,
    v: f64,
    geometry: &SteeredGeometry,
    max_steering: f64,
) -> Result<f64, SteeringError> {
    if !(v > 0.0) {
        return Err(SteeringError::Suspended(v));
    }
    Ok((geometry.wheelbase * omega_ref / v)
        .atan()
        .clamp(-max_steering, max_steering))
}

/// `phi = alpha phi_d + (1 - alpha) phi_a`.
pub fn blend_steering(phi_d: f64, phi_a: f64, alpha: f64) -> Result<f64, SteeringError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SteeringError::BlendWeight(alpha));
    }
    Ok(alpha * phi_d + (1.0 - alpha) * phi_a)
}

/// Everything that parameterizes the mechanical guidance loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteeringConfig {
    pub gains: SteeringGains,
    #[serde(rename = "max_steering_rad")]
    pub max_steering: f64,
    #[serde(rename = "servo_max_rate_rad_per_s")]
    pub servo_max_rate: f64,
    /// Corridor gating the blend; only its width and angle are used.
    pub corridor: CorridorParams,
    /// When false the blend weight is fixed at 1 (pure controller).
    pub gate_enabled: bool,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        Self {
            gains: SteeringGains::default(),
            max_steering: 1.0,
            servo_max_rate: 1.0,
            corridor: CorridorParams::steering(),
            gate_enabled: true,
        }
    }
}

impl SteeringConfig {
    pub fn validate(&self) -> Result<(), SteeringError> {
        self.gains.validate()?;
        if !(self.max_steering > 0.0 && self.max_steering < FRAC_PI_2) {
            return Err(SteeringError::InvalidParameter(format!(
                "max_steering_rad must be in (0, pi/2), got {}",
                self.max_steering
            )));
        }
        if !(self.servo_max_rate > 0.0) {
            return Err(SteeringError::InvalidParameter(format!(
                "servo_max_rate_rad_per_s must be > 0, got {}",
                self.servo_max_rate
            )));
        }
        self.corridor
            .validate()
            .map_err(|e| SteeringError::InvalidParameter(e.to_string()))
    }
}

/// One period of the wheel command chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelCommand {
    pub omega_ref: f64,
    pub phi_d: f64,
    pub phi_a: f64,
    pub alpha: f64,
    /// Blended half-car command.
    pub phi: f64,
    /// Ackermann targets sent to the servos.
    pub target_left: f64,
    pub target_right: f64,
    /// Wheel angles reached after the servo period.
    pub phi_left: f64,
    pub phi_right: f64,
}

/// Stateful mechanical guidance loop: virtual target, blend, Ackermann split
/// and servo, run at the simulation rate.
#[derive(Debug, Clone)]
pub struct SteeringController {
    config: SteeringConfig,
    geometry: SteeredGeometry,
    gate: QuantizedGuidance,
    target: Option<VirtualTargetState>,
}

impl SteeringController {
    pub fn new(
        config: SteeringConfig,
        schedule: GainSchedule,
        geometry: SteeredGeometry,
    ) -> Result<Self, SteeringError> {
        config.validate()?;
        geometry
            .validate()
            .map_err(SteeringError::InvalidParameter)?;
        let gate = QuantizedGuidance::new(config.corridor, schedule)
            .map_err(|e| SteeringError::InvalidParameter(e.to_string()))?;
        Ok(Self {
            config,
            geometry,
            gate,
            target: None,
        })
    }

    pub fn virtual_target(&self) -> Option<&VirtualTargetState> {
        self.target.as_ref()
    }

    /// Computes the wheel command for `vehicle` and advances the virtual
    /// target. The target starts at the projection of the first pose seen.
    pub fn step(
        &mut self,
        vehicle: &VehicleState,
        v: f64,
        path: &Path,
        fs: &FrenetState,
        dt: f64,
    ) -> Result<WheelCommand, SteeringError> {
        let vt = self
            .target
            .unwrap_or_else(|| VirtualTargetState::from_pose(path, &vehicle.pose, fs.s_star));
        let (next, omega_ref) =
            virtual_target_step(&vt, &vehicle.pose, v, path, &self.config.gains, dt)?;
        self.target = Some(next);

        let phi_d = steering_from_omega(omega_ref, v, &self.geometry, self.config.max_steering)?;
        let phi_a = effective_steering(vehicle.phi_left, vehicle.phi_right, &self.geometry)?;
        let alpha = if self.config.gate_enabled {
            self.gate.alpha(&TrackingError::from(fs))
        } else {
            1.0
        };
        let phi = blend_steering(phi_d, phi_a, alpha)?;
        let (target_left, target_right) = ackermann_split(phi, &self.geometry);
        let rate = self.config.servo_max_rate;
        Ok(WheelCommand {
            omega_ref,
            phi_d,
            phi_a,
            alpha,
            phi,
            target_left,
            target_right,
            phi_left: wheel_servo_step(vehicle.phi_left, target_left, rate, dt, &self.geometry),
            phi_right: wheel_servo_step(vehicle.phi_right, target_right, rate, dt, &self.geometry),
        })
    }
}
