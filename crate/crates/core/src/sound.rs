//! Virtual sound source placement for the acoustic guidance systems.
//!
//! A lookahead point `P` is built from the circle of radius `ds` around the
//! walker and the path tangent at the projection foot. It is pulled onto the
//! path (`S`), expressed in the walker frame and then quantized either into
//! three left/straight/right cones or into the finer binaural cone set.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{heading, Point, Pose};
use crate::guidance::GuidanceSymbol;
use crate::paths::{FrenetState, Path};

/// Lookahead radius used in the experiments.
pub const DEFAULT_SOUND_DISTANCE: f64 = 1.2;
/// Number of binaural cones.
pub const BINAURAL_CONES: usize = 7;

const ORIGIN_TOLERANCE: f64 = 1e-12;
/// Relative band around `|y_d| = ds` treated as the tangent case. A few ulps
/// wide so the half chord at its edge stays below a micrometer.
const TANGENT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SoundError {
    #[error("bearing undefined for a point at the walker position")]
    UndefinedBearing,
    #[error("cone count must be odd and >= 1, got {0}")]
    InvalidConeCount(usize),
}

/// Which branch of the circle/tangent construction produced `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoundPointCase {
    /// `|y_d| < ds`: two intersections, the forward one is kept.
    TwoSolutions,
    /// `|y_d| == ds`: the tangent line touches the circle at the foot.
    Tangent,
    /// `|y_d| > ds`: `P` sits on the segment from the walker to the foot.
    NoSolution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoundPoint {
    pub p: Point,
    /// Sound source on the path, world frame.
    pub s: Point,
    pub case: SoundPointCase,
}

/// Builds the lookahead point `P` and the path target `S`.
///
/// The path is treated as straight at the foot when its curvature is zero
/// over the next `ds` meters; there `S = P`, elsewhere `S` is the projection
/// of `P` onto the path.
pub fn compute_sound_point(pose: &Pose, fs: &FrenetState, path: &Path, ds: f64) -> SoundPoint {
    debug_assert!(ds > 0.0);
    let q = pose.position();
    let tangent = heading(fs.theta_c);
    let lateral = fs.y_d.abs();
    let gap = lateral - ds;

    let (p, case) = if gap.abs() <= TANGENT_TOLERANCE * ds.max(1.0) {
        (fs.f_a, SoundPointCase::Tangent)
    } else if gap < 0.0 {
        let half_chord = (ds * ds - lateral * lateral).sqrt();
        let ahead = fs.f_a + tangent * half_chord;
        let behind = fs.f_a - tangent * half_chord;
        let forward = pose.heading();
        let p = if (behind - q).dot(&forward) > (ahead - q).dot(&forward) {
            behind
        } else {
            ahead
        };
        (p, SoundPointCase::TwoSolutions)
    } else {
        let to_foot = fs.f_a - q;
        (
            q + to_foot * (ds / to_foot.norm()),
            SoundPointCase::NoSolution,
        )
    };

    let s = if case == SoundPointCase::TwoSolutions && path.is_straight_ahead(fs.s_star, ds) {
        p
    } else {
        let lo = fs.s_star - ds;
        let hi = fs.s_star + 2.0 * ds;
        path.project_window(
            &Pose::new(p.x, p.y, 0.0),
            lo.max(0.0),
            hi.min(path.total_length()),
        )
        .f_a
    };
    SoundPoint { p, s, case }
}

/// `S_cw = R(theta) (S - Q)`: body frame with x forward and y left.
pub fn to_walker_frame(s_world: &Point, pose: &Pose) -> Point {
    pose.to_body(s_world)
}

/// Bearing in the body frame, positive to the left. Points behind the walker
/// are folded onto +-90 degrees by the side they are on (dead astern goes
/// right).
fn folded_bearing(s_cw: &Point) -> Result<f64, SoundError> {
    if s_cw.norm() < ORIGIN_TOLERANCE {
        return Err(SoundError::UndefinedBearing);
    }
    if s_cw.x < 0.0 {
        return Ok(if s_cw.y > 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 });
    }
    Ok(s_cw.y.atan2(s_cw.x))
}

/// Equal partition of the front semicircle into an odd number of cones.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSet {
    /// Center ray of each cone, ascending (rightmost first).
    pub centers: Vec<f64>,
    /// Sector edges, ascending from -pi/2 to pi/2.
    pub boundaries: Vec<f64>,
    // upper edge of the forward cone, then of each cone further out
    outer_edges: Vec<f64>,
    width: f64,
}

impl ConeSet {
    pub fn equal(count: usize) -> Result<Self, SoundError> {
        if count == 0 || count.is_multiple_of(2) {
            return Err(SoundError::InvalidConeCount(count));
        }
        let width = std::f64::consts::PI / count as f64;
        let side = count / 2;
        let mut outer_edges: Vec<f64> = (0..=side).map(|k| width * (k as f64 + 0.5)).collect();
        outer_edges[side] = FRAC_PI_2;
        let centers: Vec<f64> = (0..count)
            .map(|i| (i as f64 - side as f64) * width)
            .collect();
        let mut boundaries: Vec<f64> = outer_edges.iter().rev().map(|e| -e).collect();
        boundaries.extend(outer_edges.iter().copied());
        Ok(Self {
            centers,
            boundaries,
            outer_edges,
            width,
        })
    }

    pub fn binaural() -> Self {
        Self::equal(BINAURAL_CONES).expect("odd cone count")
    }

    pub fn left_right() -> Self {
        Self::equal(3).expect("odd cone count")
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Center angle of the cone holding `bearing` (in `[-pi/2, pi/2]`).
    /// Edges belong to the cone nearer the forward direction.
    pub fn center_for(&self, bearing: f64) -> f64 {
        let magnitude = bearing.abs();
        let k = self
            .outer_edges
            .iter()
            .position(|edge| magnitude <= *edge)
            .unwrap_or(self.outer_edges.len() - 1);
        let center = k as f64 * self.width;
        if bearing < 0.0 {
            -center
        } else {
            center
        }
    }
}

/// Left/straight/right classification with three 60 degree cones.
pub fn classify_lr(s_cw: &Point) -> Result<GuidanceSymbol, SoundError> {
    let bearing = folded_bearing(s_cw)?;
    let center = ConeSet::left_right().center_for(bearing);
    Ok(if center > 0.0 {
        GuidanceSymbol::Left
    } else if center < 0.0 {
        GuidanceSymbol::Right
    } else {
        GuidanceSymbol::Straight
    })
}

/// Moves `s_cw` onto the center ray of its cone, keeping its range.
pub fn binaural_quantize(s_cw: &Point, cones: &ConeSet) -> Result<Point, SoundError> {
    let bearing = folded_bearing(s_cw)?;
    let beta = cones.center_for(bearing);
    Ok(heading(beta) * s_cw.norm())
}

/// Re-expresses the quantized source relative to a head turned by
/// `head_yaw` with respect to the walker.
pub fn head_compensate(s_s: &Point, head_yaw: f64) -> Point {
    let (s, c) = head_yaw.sin_cos();
    Point::new(c * s_s.x + s * s_s.y, -s * s_s.x + c * s_s.y)
}

/// Source in polar form for the audio renderer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoundTarget {
    pub s_world: (f64, f64),
    /// Walker-frame source before quantization.
    pub s_cw: (f64, f64),
    #[serde(rename = "range_m")]
    pub r: f64,
    /// Azimuth relative to the head, zero ahead, positive to the right.
    #[serde(rename = "azimuth_rad")]
    pub theta_az: f64,
    /// Head yaw relative to the walker the azimuth was rendered for.
    #[serde(rename = "head_yaw_rad")]
    pub head_yaw: f64,
}

impl SoundTarget {
    /// Packs the rendered point `s_p` (body frame, y left) as range and
    /// right-positive azimuth.
    pub fn from_rendered(s_world: &Point, s_cw: &Point, s_p: &Point, head_yaw: f64) -> Self {
        Self {
            s_world: (s_world.x, s_world.y),
            s_cw: (s_cw.x, s_cw.y),
            r: s_p.norm(),
            theta_az: -s_p.y.atan2(s_p.x),
            head_yaw,
        }
    }

    /// Azimuth relative to the walker heading, positive to the right.
    pub fn walker_azimuth(&self) -> f64 {
        crate::geometry::normalize_angle(self.theta_az - self.head_yaw)
    }
}
