//! Quantized Lyapunov path-following guidance shared by the haptic and the
//! left/right acoustic systems.
//!
//! The law computes the angular velocity a unicycle would need to converge
//! onto the path, scales it by the corridor gate `alpha = min(1, V1/V1max)`
//! and reduces the result to one of three symbols.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::paths::FrenetState;

/// Below this heading error `sin(x)/x` is evaluated by its series.
const SINC_SERIES_LIMIT: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuidanceError {
    #[error("guidance suspended: forward speed {0} m/s is not positive")]
    Suspended(f64),
    #[error("V1max must be positive, got {0}")]
    InvalidV1Max(f64),
    #[error("invalid guidance parameter: {0}")]
    InvalidParameter(String),
}

/// `sin(x)/x`, continuous through zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_SERIES_LIMIT {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Lateral and heading error, the two coordinates the law acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingError {
    pub y_d: f64,
    pub theta_d: f64,
}

impl TrackingError {
    pub fn new(y_d: f64, theta_d: f64) -> Self {
        Self { y_d, theta_d }
    }

    pub fn mirrored(&self) -> Self {
        Self::new(-self.y_d, -self.theta_d)
    }
}

impl From<&FrenetState> for TrackingError {
    fn from(fs: &FrenetState) -> Self {
        Self::new(fs.y_d, fs.theta_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceGains {
    pub k_y: f64,
    pub k_theta: f64,
    pub q_theta: f64,
}

impl GuidanceGains {
    pub fn new(k_y: f64, k_theta: f64, q_theta: f64) -> Result<Self, GuidanceError> {
        let gains = Self {
            k_y,
            k_theta,
            q_theta,
        };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        for (name, value) in [
            ("k_y", self.k_y),
            ("k_theta", self.k_theta),
            ("q_theta", self.q_theta),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(GuidanceError::InvalidParameter(format!(
                    "{name} must be > 0, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Half-width, half-angle and dead band of the virtual corridor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorParams {
    #[serde(rename = "half_width_m")]
    pub y_h: f64,
    #[serde(rename = "half_angle_rad")]
    pub theta_h: f64,
    #[serde(rename = "omega_threshold_rad_per_s")]
    pub t_omega: f64,
}

impl CorridorParams {
    /// Corridor used by the haptic and acoustic systems.
    pub fn cue() -> Self {
        Self {
            y_h: 0.3,
            theta_h: 0.52,
            t_omega: 0.1,
        }
    }

    /// Corridor gating the mechanical steering blend.
    pub fn steering() -> Self {
        Self {
            theta_h: 1.62,
            ..Self::cue()
        }
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        if !(self.y_h > 0.0) {
            return Err(GuidanceError::InvalidParameter(format!(
                "half_width_m must be > 0, got {}",
                self.y_h
            )));
        }
        if !(self.theta_h > 0.0 && self.theta_h < std::f64::consts::PI) {
            return Err(GuidanceError::InvalidParameter(format!(
                "half_angle_rad must be in (0, pi), got {}",
                self.theta_h
            )));
        }
        if !(self.t_omega >= 0.0) {
            return Err(GuidanceError::InvalidParameter(format!(
                "omega_threshold_rad_per_s must be >= 0, got {}",
                self.t_omega
            )));
        }
        Ok(())
    }

    pub fn contains(&self, y_d: f64) -> bool {
        y_d.abs() <= self.y_h
    }
}

/// Gain sets used inside and outside the corridor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSchedule {
    pub inside_k_y: f64,
    pub inside_k_theta: f64,
    pub outside_k_y: f64,
    pub outside_k_theta: f64,
    pub q_theta: f64,
}

impl Default for GainSchedule {
    fn default() -> Self {
        Self {
            inside_k_y: 0.1,
            inside_k_theta: 1.0,
            outside_k_y: 1.0,
            outside_k_theta: 0.1,
            q_theta: 1.0,
        }
    }
}

impl GainSchedule {
    pub fn inside(&self) -> GuidanceGains {
        GuidanceGains {
            k_y: self.inside_k_y,
            k_theta: self.inside_k_theta,
            q_theta: self.q_theta,
        }
    }

    pub fn outside(&self) -> GuidanceGains {
        GuidanceGains {
            k_y: self.outside_k_y,
            k_theta: self.outside_k_theta,
            q_theta: self.q_theta,
        }
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        self.inside().validate()?;
        self.outside().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GuidanceSymbol {
    Left,
    Right,
    Straight,
}

impl GuidanceSymbol {
    pub fn mirrored(self) -> Self {
        match self {
            GuidanceSymbol::Left => GuidanceSymbol::Right,
            GuidanceSymbol::Right => GuidanceSymbol::Left,
            GuidanceSymbol::Straight => GuidanceSymbol::Straight,
        }
    }

    /// +1 for left, -1 for right, 0 for straight.
    pub fn turn_sign(self) -> f64 {
        match self {
            GuidanceSymbol::Left => 1.0,
            GuidanceSymbol::Right => -1.0,
            GuidanceSymbol::Straight => 0.0,
        }
    }
}

impl fmt::Display for GuidanceSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GuidanceSymbol::Left => "left",
            GuidanceSymbol::Right => "right",
            GuidanceSymbol::Straight => "straight",
        })
    }
}

/// `V1 = (k_y y_d^2 + k_theta theta_d^2) / 2`.
pub fn lyapunov_value(err: &TrackingError, gains: &GuidanceGains) -> f64 {
    0.5 * (gains.k_y * err.y_d * err.y_d + gains.k_theta * err.theta_d * err.theta_d)
}

/// Inside gains when `|y_d| <= y_h` (boundary counts as inside).
pub fn select_gains(y_d: f64, corridor: &CorridorParams, schedule: &GainSchedule) -> GuidanceGains {
    if corridor.contains(y_d) {
        schedule.inside()
    } else {
        schedule.outside()
    }
}

/// V1 at the corridor edge `(y_h, theta_h)` for the given gains.
pub fn v1_max(corridor: &CorridorParams, gains: &GuidanceGains) -> f64 {
    lyapunov_value(&TrackingError::new(corridor.y_h, corridor.theta_h), gains)
}

/// `omega_d = -q_theta theta_d - (k_y / k_theta) y_d sinc(theta_d) v`.
pub fn desired_omega(
    err: &TrackingError,
    v: f64,
    gains: &GuidanceGains,
) -> Result<f64, GuidanceError> {
    if !(v > 0.0) {
        return Err(GuidanceError::Suspended(v));
    }
    Ok(-gains.q_theta * err.theta_d - gains.k_y / gains.k_theta * err.y_d * sinc(err.theta_d) * v)
}

/// `alpha = min(1, V1 / V1max)`.
pub fn corridor_alpha(v1: f64, v1_max: f64) -> Result<f64, GuidanceError> {
    if !(v1_max > 0.0) {
        return Err(GuidanceError::InvalidV1Max(v1_max));
    }
    Ok((v1.max(0.0) / v1_max).min(1.0))
}

pub fn quantize(omega: f64, t_omega: f64) -> GuidanceSymbol {
    if omega > t_omega {
        GuidanceSymbol::Left
    } else if omega < -t_omega {
        GuidanceSymbol::Right
    } else {
        GuidanceSymbol::Straight
    }
}

/// Every intermediate quantity of one evaluation of the gated law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceDecision {
    pub gains: GuidanceGains,
    pub v1: f64,
    pub v1_max: f64,
    pub alpha: f64,
    pub omega_d: f64,
    /// `alpha * omega_d`.
    pub omega: f64,
    pub symbol: GuidanceSymbol,
}

impl GuidanceDecision {
    /// A cue is emitted whenever the gated command is not "straight".
    pub fn emits_cue(&self) -> bool {
        self.symbol != GuidanceSymbol::Straight
    }

    /// The walker is outside the gate (`alpha == 1`).
    pub fn gate_open(&self) -> bool {
        self.alpha >= 1.0
    }
}

/// Gain scheduling, gate and quantizer bundled together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizedGuidance {
    pub corridor: CorridorParams,
    pub schedule: GainSchedule,
}

impl QuantizedGuidance {
    pub fn new(corridor: CorridorParams, schedule: GainSchedule) -> Result<Self, GuidanceError> {
        corridor.validate()?;
        schedule.validate()?;
        Ok(Self { corridor, schedule })
    }

    /// Gate value alone; usable at any speed.
    pub fn alpha(&self, err: &TrackingError) -> f64 {
        let gains = select_gains(err.y_d, &self.corridor, &self.schedule);
        let v1 = lyapunov_value(err, &gains);
        corridor_alpha(v1, v1_max(&self.corridor, &gains)).expect("validated corridor")
    }

    pub fn evaluate(&self, err: &TrackingError, v: f64) -> Result<GuidanceDecision, GuidanceError> {
        let gains = select_gains(err.y_d, &self.corridor, &self.schedule);
        let v1 = lyapunov_value(err, &gains);
        let v1_max = v1_max(&self.corridor, &gains);
        let alpha = corridor_alpha(v1, v1_max)?;
        let omega_d = desired_omega(err, v, &gains)?;
        let omega = alpha * omega_d;
        Ok(GuidanceDecision {
            gains,
            v1,
            v1_max,
            alpha,
            omega_d,
            omega,
            symbol: quantize(omega, self.corridor.t_omega),
        })
    }
}

impl Default for QuantizedGuidance {
    fn default() -> Self {
        Self {
            corridor: CorridorParams::cue(),
            schedule: GainSchedule::default(),
        }
    }
}
