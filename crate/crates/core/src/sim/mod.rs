//! Trial harness: message bus, simulated user and the per-mode guidance
//! pipelines wired together at a fixed simulation rate.

pub mod bus;
mod trial;
mod user;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guidance::{CorridorParams, GainSchedule, GuidanceSymbol};
use crate::kinematics::{KinematicsError, SteeredGeometry};
use crate::sound::{SoundError, SoundTarget, BINAURAL_CONES, DEFAULT_SOUND_DISTANCE};
use crate::steering::{SteeringConfig, SteeringError};

pub use bus::{Bus, BusError, Message, Schema, Subscription, WheelTargets};
pub use trial::{run_trial, TraceSample, TrialTrace};
pub use user::{cue_response, SimulatedUser, UserCommand, UserModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuidanceMode {
    Haptic,
    Acoustic,
    Binaural,
    Mechanical,
}

impl GuidanceMode {
    pub const ALL: [GuidanceMode; 4] = [
        GuidanceMode::Haptic,
        GuidanceMode::Acoustic,
        GuidanceMode::Binaural,
        GuidanceMode::Mechanical,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GuidanceMode::Haptic => "haptic",
            GuidanceMode::Acoustic => "acoustic",
            GuidanceMode::Binaural => "binaural",
            GuidanceMode::Mechanical => "mechanical",
        }
    }
}

impl fmt::Display for GuidanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GuidanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GuidanceMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                format!("unknown guidance mode '{s}' (expected haptic, acoustic, binaural or mechanical)")
            })
    }
}

/// What the walker tells its user at a given moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuidanceCue {
    None,
    Symbol(GuidanceSymbol),
    Target(SoundTarget),
}

impl fmt::Display for GuidanceCue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuidanceCue::None => f.write_str("none"),
            GuidanceCue::Symbol(s) => write!(f, "{s}"),
            GuidanceCue::Target(t) => write!(f, "source:{:.4}:{:.4}", t.r, t.theta_az),
        }
    }
}

/// Sinusoidal head yaw relative to the walker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadMotion {
    pub amplitude_rad: f64,
    pub period_s: f64,
}

impl HeadMotion {
    pub fn yaw_at(&self, t: f64) -> f64 {
        self.amplitude_rad * (2.0 * std::f64::consts::PI * t / self.period_s).sin()
    }
}

/// Parameters shared by every trial of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt_s: f64,
    /// Period at which cues are recomputed and published.
    pub cue_period_s: f64,
    pub timeout_s: f64,
    /// Corridor of the haptic and acoustic systems.
    pub cue_corridor: CorridorParams,
    pub gains: GainSchedule,
    pub sound_distance_m: f64,
    pub binaural_cones: usize,
    pub steering: SteeringConfig,
    pub geometry: SteeredGeometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_motion: Option<HeadMotion>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_s: 0.01,
            cue_period_s: 0.15,
            timeout_s: 120.0,
            cue_corridor: CorridorParams::cue(),
            gains: GainSchedule::default(),
            sound_distance_m: DEFAULT_SOUND_DISTANCE,
            binaural_cones: BINAURAL_CONES,
            steering: SteeringConfig::default(),
            geometry: SteeredGeometry::default(),
            head_motion: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt_s > 0.0) {
            return Err(format!("dt_s must be > 0, got {}", self.dt_s));
        }
        if !(self.cue_period_s >= self.dt_s) {
            return Err(format!(
                "cue_period_s must be >= dt_s, got {}",
                self.cue_period_s
            ));
        }
        if !(self.timeout_s > 0.0) {
            return Err(format!("timeout_s must be > 0, got {}", self.timeout_s));
        }
        if !(self.sound_distance_m > 0.0) {
            return Err(format!(
                "sound_distance_m must be > 0, got {}",
                self.sound_distance_m
            ));
        }
        self.cue_corridor
            .validate()
            .map_err(|e| format!("cue_corridor: {e}"))?;
        self.gains.validate().map_err(|e| format!("gains: {e}"))?;
        crate::sound::ConeSet::equal(self.binaural_cones)
            .map_err(|e| format!("binaural_cones: {e}"))?;
        self.steering
            .validate()
            .map_err(|e| format!("steering: {e}"))?;
        self.geometry
            .validate()
            .map_err(|e| format!("geometry: {e}"))?;
        if let Some(head) = &self.head_motion {
            if !(head.period_s > 0.0) {
                return Err("head_motion.period_s must be > 0".into());
            }
        }
        Ok(())
    }

    /// Simulation steps per cue period.
    pub fn cue_every(&self) -> usize {
        ((self.cue_period_s / self.dt_s).round() as usize).max(1)
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Steering(#[from] SteeringError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Sound(#[from] SoundError),
    #[error(transparent)]
    Bus(#[from] BusError),
}
