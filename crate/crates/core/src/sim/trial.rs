use std::io::{self, Write};

use crate::geometry::{Point, Pose};
use crate::guidance::{QuantizedGuidance, TrackingError};
use crate::kinematics::{step_steered, step_unicycle, VehicleState};
use crate::paths::{FrenetState, Path};
use crate::sound::{
    binaural_quantize, classify_lr, compute_sound_point, head_compensate, to_walker_frame, ConeSet,
    SoundError, SoundTarget,
};
use crate::steering::SteeringController;

use super::bus::{
    Bus, Message, WheelTargets, TOPIC_GUIDANCE_CUE, TOPIC_POSE, TOPIC_SOUND_SOURCE, TOPIC_WHEEL_CMD,
};
use super::{GuidanceCue, GuidanceMode, SimConfig, SimError, SimulatedUser, UserModel};

/// Completion slack on the projection abscissa.
const END_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub pose: Pose,
    pub s_star: f64,
    pub y_d: f64,
    pub theta_d: f64,
    /// Last cue published by the walker.
    pub cue: GuidanceCue,
    /// Wheel angles (left, right); mechanical mode only.
    pub wheels: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub mode: GuidanceMode,
    pub path_id: String,
    pub seed: u64,
    /// False when the trial hit the timeout before the end of the path.
    pub complete: bool,
    pub samples: Vec<TraceSample>,
}

impl TrialTrace {
    pub const CSV_HEADER: &'static str = "t,x,y,theta,y_d,theta_d,cue,phi_left,phi_right";

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for s in &self.samples {
            let (l, r) = match s.wheels {
                Some((l, r)) => (format!("{l:.6}"), format!("{r:.6}")),
                None => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{:.2},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{}",
                s.t, s.pose.x, s.pose.y, s.pose.theta, s.y_d, s.theta_d, s.cue, l, r
            )?;
        }
        Ok(())
    }

    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }
}

/// Cue computed by one of the passive guidance pipelines.
struct CuePipeline<'a> {
    mode: GuidanceMode,
    path: &'a Path,
    gate: QuantizedGuidance,
    cones: ConeSet,
    config: &'a SimConfig,
}

impl CuePipeline<'_> {
    fn evaluate(
        &self,
        pose: &Pose,
        fs: &FrenetState,
        v: f64,
        t: f64,
    ) -> Result<GuidanceCue, SimError> {
        let err = TrackingError::from(fs);
        let decision = self
            .gate
            .evaluate(&err, v)
            .map_err(|e| SimError::Config(e.to_string()))?;
        let cue = match self.mode {
            GuidanceMode::Haptic if decision.emits_cue() => GuidanceCue::Symbol(decision.symbol),
            GuidanceMode::Acoustic if decision.emits_cue() => {
                let s_cw = self.source(pose, fs).1;
                undefined_is_silent(classify_lr(&s_cw).map(GuidanceCue::Symbol))?
            }
            GuidanceMode::Binaural if decision.gate_open() => {
                let (s_world, s_cw) = self.source(pose, fs);
                let head_yaw = self.config.head_motion.map_or(0.0, |h| h.yaw_at(t));
                undefined_is_silent(binaural_quantize(&s_cw, &self.cones).map(|s_s| {
                    let s_p = head_compensate(&s_s, head_yaw);
                    GuidanceCue::Target(SoundTarget::from_rendered(&s_world, &s_cw, &s_p, head_yaw))
                }))?
            }
            _ => GuidanceCue::None,
        };
        Ok(cue)
    }

    fn source(&self, pose: &Pose, fs: &FrenetState) -> (Point, Point) {
        let sp = compute_sound_point(pose, fs, self.path, self.config.sound_distance_m);
        (sp.s, to_walker_frame(&sp.s, pose))
    }
}

/// A source on top of the walker has no direction; nothing is played.
fn undefined_is_silent(cue: Result<GuidanceCue, SoundError>) -> Result<GuidanceCue, SimError> {
    match cue {
        Err(SoundError::UndefinedBearing) => Ok(GuidanceCue::None),
        other => other.map_err(SimError::from),
    }
}

/// Walks one simulated user along `path` under the given guidance mode.
///
/// Pose, cues and wheel commands travel over a per-trial bus. The trial ends
/// when the projection abscissa reaches the end of the path, or at the
/// timeout, in which case the trace is flagged incomplete.
pub fn run_trial(
    mode: GuidanceMode,
    path: &Path,
    start: Pose,
    user_model: &UserModel,
    config: &SimConfig,
) -> Result<TrialTrace, SimError> {
    config.validate().map_err(SimError::Config)?;
    user_model.validate().map_err(SimError::Config)?;

    let mut bus = Bus::with_standard_topics();
    let pose_in = bus.subscribe(TOPIC_POSE)?;
    let cue_in = bus.subscribe(TOPIC_GUIDANCE_CUE)?;
    let source_in = bus.subscribe(TOPIC_SOUND_SOURCE)?;
    let wheels_in = bus.subscribe(TOPIC_WHEEL_CMD)?;

    let pipeline = CuePipeline {
        mode,
        path,
        gate: QuantizedGuidance::new(config.cue_corridor, config.gains)
            .map_err(|e| SimError::Config(e.to_string()))?,
        cones: ConeSet::equal(config.binaural_cones)?,
        config,
    };
    let mut controller = match mode {
        GuidanceMode::Mechanical => Some(SteeringController::new(
            config.steering,
            config.gains,
            config.geometry,
        )?),
        _ => None,
    };

    let mut user = SimulatedUser::new(*user_model);
    let v = user.speed();
    let dt = config.dt_s;
    let cue_every = config.cue_every();
    let max_steps = (config.timeout_s / dt).round() as usize;
    let end = path.total_length() - END_TOLERANCE;

    let mut vehicle = VehicleState::straight(start);
    let mut s_prev = 0.0;
    let mut published = GuidanceCue::None;
    let mut samples = Vec::with_capacity(max_steps.min(1 << 16) + 1);
    let mut complete = false;

    for k in 0..=max_steps {
        let t = k as f64 * dt;
        bus.publish(
            TOPIC_POSE,
            Message::Pose {
                t,
                pose: vehicle.pose,
            },
        )?;

        // walker side: localisation, guidance and actuation
        let mut sensed = vehicle.pose;
        for msg in bus.drain(&pose_in) {
            if let Message::Pose { pose, .. } = msg {
                sensed = pose;
            }
        }
        let fs = path.project_forward(&sensed, s_prev);
        s_prev = fs.s_star;

        if let Some(ctrl) = controller.as_mut() {
            let cmd = ctrl.step(&vehicle, v, path, &fs, dt)?;
            let targets = WheelTargets {
                left: cmd.phi_left,
                right: cmd.phi_right,
            };
            bus.publish(TOPIC_WHEEL_CMD, Message::Wheels { t, targets })?;
        } else if k % cue_every == 0 {
            let cue = pipeline.evaluate(&sensed, &fs, v, t)?;
            let topic = if mode == GuidanceMode::Binaural {
                TOPIC_SOUND_SOURCE
            } else {
                TOPIC_GUIDANCE_CUE
            };
            bus.publish(topic, Message::Cue { t, cue })?;
        }

        // user side: perceive cues
        for msg in bus.drain(&cue_in).into_iter().chain(bus.drain(&source_in)) {
            if let Message::Cue { t, cue } = msg {
                published = cue;
                user.perceive(t, cue);
            }
        }

        samples.push(TraceSample {
            t,
            pose: vehicle.pose,
            s_star: fs.s_star,
            y_d: fs.y_d,
            theta_d: fs.theta_d,
            cue: published,
            wheels: controller
                .as_ref()
                .map(|_| (vehicle.phi_left, vehicle.phi_right)),
        });
        if fs.s_star >= end {
            complete = true;
            break;
        }
        if k == max_steps {
            break;
        }

        // plant: servo positions, then motion
        let command = user.step(mode, t, dt);
        for msg in bus.drain(&wheels_in) {
            if let Message::Wheels { targets, .. } = msg {
                vehicle.phi_left = targets.left;
                vehicle.phi_right = targets.right;
            }
        }
        vehicle = if controller.is_some() {
            step_steered(&vehicle, command.v, &config.geometry, dt)?
        } else {
            let pose = step_unicycle(&vehicle.pose, command.v, command.omega, dt);
            VehicleState {
                pose: Pose::new(pose.x, pose.y, pose.theta + command.heading_noise),
                ..vehicle
            }
        };
    }

    if !complete {
        log::warn!(
            "{mode} trial timed out after {:.1} s at s = {s_prev:.3} of {:.3} m",
            config.timeout_s,
            path.total_length()
        );
    }
    Ok(TrialTrace {
        mode,
        path_id: String::new(),
        seed: user_model.seed,
        complete,
        samples,
    })
}
