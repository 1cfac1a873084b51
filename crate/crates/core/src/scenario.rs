//! Batch study description: which guidance modes run on which paths, how
//! many times, and with which user and simulation parameters.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pose;
use crate::metrics::{compute_metrics, MetricsError, TrialMetrics};
use crate::paths::{make_study_path, Path, StudyShape};
use crate::sim::{run_trial, GuidanceMode, SimConfig, SimError, TrialTrace, UserModel};

pub const SCHEMA_VERSION: u32 = 1;

/// Heading offset of the I-path start, either side chosen per trial.
pub const I_START_HEADING_RAD: f64 = 10.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MirrorPolicy {
    Never,
    Always,
    /// Odd-numbered trials walk the mirrored path.
    Alternate,
}

impl MirrorPolicy {
    pub fn mirrored(&self, trial: usize) -> bool {
        match self {
            MirrorPolicy::Never => false,
            MirrorPolicy::Always => true,
            MirrorPolicy::Alternate => trial % 2 == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub shape: StudyShape,
    #[serde(default = "default_mirror")]
    pub mirror: MirrorPolicy,
}

fn default_mirror() -> MirrorPolicy {
    MirrorPolicy::Alternate
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub modes: Vec<GuidanceMode>,
    pub paths: Vec<PathSpec>,
    pub trials_per_cell: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub i_start_heading_rad: f64,
    pub user: UserModel,
    pub simulation: SimConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            modes: GuidanceMode::ALL.to_vec(),
            paths: StudyShape::ALL
                .iter()
                .map(|&shape| PathSpec {
                    shape,
                    mirror: MirrorPolicy::Alternate,
                })
                .collect(),
            trials_per_cell: 10,
            seed: 2024,
            output_dir: PathBuf::from("results"),
            i_start_heading_rad: I_START_HEADING_RAD,
            user: UserModel::default(),
            simulation: SimConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario = Self::parse(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Parses without the semantic checks, for callers that override fields
    /// before validating.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.modes.is_empty() {
            return Err(invalid("modes", "at least one guidance mode is required"));
        }
        if self.paths.is_empty() {
            return Err(invalid("paths", "at least one path is required"));
        }
        if self.trials_per_cell == 0 {
            return Err(invalid("trials_per_cell", "must be >= 1"));
        }
        if !self.i_start_heading_rad.is_finite()
            || self.i_start_heading_rad.abs() >= std::f64::consts::FRAC_PI_2
        {
            return Err(invalid("i_start_heading_rad", "must lie in (-pi/2, pi/2)"));
        }
        self.user.validate().map_err(|m| invalid("user", m))?;
        self.simulation
            .validate()
            .map_err(|m| invalid("simulation", m))?;
        Ok(())
    }

    /// Keeps only the listed modes and shapes; `None` keeps everything.
    pub fn filtered(
        mut self,
        modes: Option<&[GuidanceMode]>,
        shapes: Option<&[StudyShape]>,
    ) -> Self {
        if let Some(modes) = modes {
            self.modes.retain(|m| modes.contains(m));
        }
        if let Some(shapes) = shapes {
            self.paths.retain(|p| shapes.contains(&p.shape));
        }
        self
    }

    /// Every trial of the scenario in cell order.
    pub fn plan(&self) -> Vec<TrialPlan> {
        let mut plans = Vec::new();
        for &mode in &self.modes {
            for spec in &self.paths {
                for trial in 0..self.trials_per_cell {
                    plans.push(self.trial_plan(mode, spec, trial));
                }
            }
        }
        plans
    }

    /// The seed, path variant and start depend on shape and trial only, so
    /// every mode meets the same users on the same paths.
    fn trial_plan(&self, mode: GuidanceMode, spec: &PathSpec, trial: usize) -> TrialPlan {
        let shape_index = StudyShape::ALL
            .iter()
            .position(|s| *s == spec.shape)
            .expect("known shape") as u64;
        let seed = splitmix64(splitmix64(self.seed ^ (shape_index << 32)) ^ trial as u64);
        let heading = match spec.shape {
            StudyShape::I if seed & 1 == 0 => self.i_start_heading_rad,
            StudyShape::I => -self.i_start_heading_rad,
            _ => 0.0,
        };
        TrialPlan {
            mode,
            shape: spec.shape,
            trial,
            seed,
            mirrored: spec.mirror.mirrored(trial),
            start: Pose::new(0.0, 0.0, heading),
        }
    }
}

/// SplitMix64 finalizer, used to spread scenario seeds over trials.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialPlan {
    pub mode: GuidanceMode,
    pub shape: StudyShape,
    pub trial: usize,
    pub seed: u64,
    pub mirrored: bool,
    /// Walker start; every path begins at the origin heading along +x.
    pub start: Pose,
}

impl TrialPlan {
    pub fn path(&self) -> Path {
        make_study_path(self.shape, self.mirrored, Pose::origin())
    }

    pub fn path_id(&self) -> String {
        if self.mirrored {
            format!("{}-mirrored", self.shape)
        } else {
            self.shape.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub plan: TrialPlan,
    pub metrics: TrialMetrics,
    pub trace: TrialTrace,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{mode} on {path_id}, trial {trial}: {source}")]
    Trial {
        mode: GuidanceMode,
        path_id: String,
        trial: usize,
        #[source]
        source: SimError,
    },
    #[error("{mode} on {path_id}, trial {trial}: {source}")]
    Metrics {
        mode: GuidanceMode,
        path_id: String,
        trial: usize,
        #[source]
        source: MetricsError,
    },
}

pub fn run_plan(
    plan: &TrialPlan,
    user: &UserModel,
    config: &SimConfig,
) -> Result<TrialRecord, RunError> {
    let path = plan.path();
    let mut trace = run_trial(
        plan.mode,
        &path,
        plan.start,
        &user.with_seed(plan.seed),
        config,
    )
    .map_err(|source| RunError::Trial {
        mode: plan.mode,
        path_id: plan.path_id(),
        trial: plan.trial,
        source,
    })?;
    trace.path_id = plan.path_id();
    let metrics = compute_metrics(&trace, &path).map_err(|source| RunError::Metrics {
        mode: plan.mode,
        path_id: plan.path_id(),
        trial: plan.trial,
        source,
    })?;
    Ok(TrialRecord {
        plan: *plan,
        metrics,
        trace,
    })
}

/// Runs every trial on the rayon pool. Records come back in plan order.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<TrialRecord>, RunError> {
    scenario
        .plan()
        .par_iter()
        .map(|plan| run_plan(plan, &scenario.user, &scenario.simulation))
        .collect()
}
