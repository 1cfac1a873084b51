//! Guidance laws, vehicle models and a simulated-user trial harness for a
//! robotic walking assistant that keeps its user on a planned path.
//!
//! Four guidance systems are modelled:
//!
//! * haptic and left/right acoustic cues, both driven by a quantized
//!   Lyapunov path-following law ([`guidance`], [`sound`]);
//! * binaural cues that place a virtual sound source ahead on the path
//!   ([`sound`]);
//! * mechanical guidance that steers the front wheels with a virtual-target
//!   path follower ([`steering`], [`kinematics`]).
//!
//! [`sim`] runs trials of each system against a simple user model and
//! [`metrics`] reduces the resulting traces to error, time, length and
//! speed. [`scenario`] and [`report`] wrap batches of trials and their
//! output files.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod guidance;
pub mod kinematics;
pub mod metrics;
pub mod paths;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod sound;
pub mod steering;

pub use geometry::{normalize_angle, Point, Pose};
pub use paths::{make_study_path, FrenetState, Path, StudyShape};
