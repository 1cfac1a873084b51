//! Piecewise line/arc paths, the three study path generators, and Frenet
//! projection of a walker pose onto a path.
//!
//! Sign conventions: positive curvature bends left, positive lateral error
//! means the walker is on the left of the path tangent.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cross, heading, normalize_angle, Point, Pose};

/// Radius of the single quarter-circle arc of the C path.
pub const C_RADIUS: f64 = 6.37;
/// Radius of the three arcs of the S path.
pub const S_RADIUS: f64 = 4.78;
/// Length of the straight I path.
pub const I_LENGTH: f64 = 10.0;

/// Joint tolerance for C0 continuity between consecutive segments.
const JOINT_TOLERANCE: f64 = 1e-9;
/// Candidates closer than this are considered equidistant.
const TIE_TOLERANCE: f64 = 1e-12;
/// Backward slack allowed for the projection while a trial is running.
pub const BACKTRACK_WINDOW: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("path has no segments")]
    Empty,
    #[error("segment {index} has non-positive length {length}")]
    NonPositiveLength { index: usize, length: f64 },
    #[error("segment {index} is an arc with zero curvature")]
    FlatArc { index: usize },
    #[error("segment {index} is a line with curvature {curvature}")]
    CurvedLine { index: usize, curvature: f64 },
    #[error("segment {index} does not start where segment {prev} ends (gap {gap} m)")]
    Discontinuous { index: usize, prev: usize, gap: f64 },
    #[error("abscissa {s} outside [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Line,
    Arc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: Pose,
    #[serde(rename = "length_m")]
    pub length: f64,
    #[serde(rename = "curvature_per_m")]
    pub curvature: f64,
}

impl Segment {
    pub fn line(start: Pose, length: f64) -> Self {
        Self {
            kind: SegmentKind::Line,
            start,
            length,
            curvature: 0.0,
        }
    }

    pub fn arc(start: Pose, length: f64, curvature: f64) -> Self {
        Self {
            kind: SegmentKind::Arc,
            start,
            length,
            curvature,
        }
    }

    fn center(&self) -> Point {
        let normal = Point::new(-self.start.theta.sin(), self.start.theta.cos());
        self.start.position() + normal / self.curvature
    }

    /// Position and tangent orientation at local abscissa `u`.
    pub fn local_point(&self, u: f64) -> (Point, f64) {
        let theta0 = self.start.theta;
        match self.kind {
            SegmentKind::Line => (self.start.position() + heading(theta0) * u, theta0),
            SegmentKind::Arc => {
                let k = self.curvature;
                let theta = theta0 + k * u;
                let p = Point::new(
                    self.start.x + (theta.sin() - theta0.sin()) / k,
                    self.start.y - (theta.cos() - theta0.cos()) / k,
                );
                (p, normalize_angle(theta))
            }
        }
    }

    pub fn end_pose(&self) -> Pose {
        let (p, theta) = self.local_point(self.length);
        Pose::new(p.x, p.y, theta)
    }

    /// Local abscissa in `[lo, hi]` of the point closest to `q`.
    fn nearest(&self, q: &Point, lo: f64, hi: f64) -> f64 {
        match self.kind {
            SegmentKind::Line => (q - self.start.position())
                .dot(&heading(self.start.theta))
                .clamp(lo, hi),
            SegmentKind::Arc => {
                let k = self.curvature;
                let d = q - self.center();
                if d.norm() < TIE_TOLERANCE {
                    // every point of the arc is equidistant
                    return lo;
                }
                // tangent orientation of the circle point on the ray towards q
                let theta_q = d.y.atan2(d.x) + k.signum() * PI / 2.0;
                let sweep = if k > 0.0 {
                    (theta_q - self.start.theta).rem_euclid(2.0 * PI)
                } else {
                    (self.start.theta - theta_q).rem_euclid(2.0 * PI)
                };
                let u = sweep / k.abs();
                if (lo..=hi).contains(&u) {
                    u
                } else {
                    let dist = |u: f64| (self.local_point(u).0 - q).norm_squared();
                    if dist(hi) + TIE_TOLERANCE < dist(lo) {
                        hi
                    } else {
                        lo
                    }
                }
            }
        }
    }
}

/// Frenet error coordinates of a pose relative to a path. The longitudinal
/// coordinate is zero by construction and is not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetState {
    /// Abscissa of the projection foot.
    pub s_star: f64,
    /// Projection foot.
    pub f_a: Point,
    /// Signed lateral error, positive when the walker is left of the path.
    pub y_d: f64,
    /// Heading error in `[-pi, pi)`.
    pub theta_d: f64,
    /// Tangent orientation at the foot.
    pub theta_c: f64,
    /// Path curvature at the foot.
    pub curvature: f64,
}

/// Result of a path query at a given abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub point: Point,
    pub theta_c: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathDocument", into = "PathDocument")]
pub struct Path {
    segments: Vec<Segment>,
    total_length: f64,
}

#[derive(Serialize, Deserialize)]
struct PathDocument {
    segments: Vec<Segment>,
}

impl TryFrom<PathDocument> for Path {
    type Error = PathError;

    fn try_from(doc: PathDocument) -> Result<Self, Self::Error> {
        Path::new(doc.segments)
    }
}

impl From<Path> for PathDocument {
    fn from(path: Path) -> Self {
        PathDocument {
            segments: path.segments,
        }
    }
}

impl Path {
    pub fn new(segments: Vec<Segment>) -> Result<Self, PathError> {
        if segments.is_empty() {
            return Err(PathError::Empty);
        }
        for (index, seg) in segments.iter().enumerate() {
            if !(seg.length > 0.0) {
                return Err(PathError::NonPositiveLength {
                    index,
                    length: seg.length,
                });
            }
            match seg.kind {
                SegmentKind::Arc if seg.curvature == 0.0 => {
                    return Err(PathError::FlatArc { index });
                }
                SegmentKind::Line if seg.curvature != 0.0 => {
                    return Err(PathError::CurvedLine {
                        index,
                        curvature: seg.curvature,
                    });
                }
                _ => {}
            }
            if index > 0 {
                let end = segments[index - 1].end_pose().position();
                let gap = (end - seg.start.position()).norm();
                if gap > JOINT_TOLERANCE {
                    return Err(PathError::Discontinuous {
                        index,
                        prev: index - 1,
                        gap,
                    });
                }
            }
        }
        let total_length = segments.iter().map(|s| s.length).sum();
        Ok(Self {
            segments,
            total_length,
        })
    }

    /// Chains segments of `(length, curvature)` starting at `start`, each
    /// starting at the previous end pose.
    pub fn chain(start: Pose, pieces: &[(f64, f64)]) -> Result<Self, PathError> {
        let mut pose = start;
        let mut segments = Vec::with_capacity(pieces.len());
        for &(length, curvature) in pieces {
            let seg = if curvature == 0.0 {
                Segment::line(pose, length)
            } else {
                Segment::arc(pose, length, curvature)
            };
            pose = seg.end_pose();
            segments.push(seg);
        }
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn start_pose(&self) -> Pose {
        self.segments[0].start
    }

    /// Abscissa at which each segment starts.
    fn segment_offsets(&self) -> impl Iterator<Item = (f64, &Segment)> {
        self.segments.iter().scan(0.0, |acc, seg| {
            let s0 = *acc;
            *acc += seg.length;
            Some((s0, seg))
        })
    }

    /// Position, tangent orientation and signed curvature at abscissa `s`.
    /// A joint belongs to the segment that starts there.
    pub fn point_at(&self, s: f64) -> Result<PathPoint, PathError> {
        if !(0.0..=self.total_length).contains(&s) {
            return Err(PathError::OutOfRange {
                s,
                length: self.total_length,
            });
        }
        Ok(self.point_at_clamped(s))
    }

    /// Like [`Path::point_at`] with `s` clamped to the path ends.
    pub fn point_at_clamped(&self, s: f64) -> PathPoint {
        let s = s.clamp(0.0, self.total_length);
        let last = self.segments.len() - 1;
        let (s0, seg) = self
            .segment_offsets()
            .enumerate()
            .find(|(i, (s0, seg))| *i == last || s < s0 + seg.length)
            .map(|(_, found)| found)
            .expect("path is non-empty");
        let u = (s - s0).clamp(0.0, seg.length);
        let (point, theta_c) = seg.local_point(u);
        PathPoint {
            point,
            theta_c,
            curvature: seg.curvature,
        }
    }

    /// Globally nearest projection of `pose` onto the path. Equidistant
    /// candidates resolve to the smallest abscissa.
    pub fn project(&self, pose: &Pose) -> FrenetState {
        self.project_window(pose, 0.0, self.total_length)
    }

    /// Projection used while a trial is running: candidates behind
    /// `previous_s - BACKTRACK_WINDOW` are excluded.
    pub fn project_forward(&self, pose: &Pose, previous_s: f64) -> FrenetState {
        let lo = (previous_s - BACKTRACK_WINDOW).clamp(0.0, self.total_length);
        self.project_window(pose, lo, self.total_length)
    }

    /// Nearest projection restricted to abscissae in `[s_min, s_max]`.
    pub fn project_window(&self, pose: &Pose, s_min: f64, s_max: f64) -> FrenetState {
        let q = pose.position();
        let mut best: Option<(f64, f64, &Segment, f64)> = None; // (dist², s, seg, u)
        for (s0, seg) in self.segment_offsets() {
            let lo = (s_min - s0).max(0.0);
            let hi = (s_max - s0).min(seg.length);
            if lo > hi {
                continue;
            }
            let u = seg.nearest(&q, lo, hi);
            let d2 = (seg.local_point(u).0 - q).norm_squared();
            if best.is_none_or(|(bd, ..)| d2 + TIE_TOLERANCE < bd) {
                best = Some((d2, s0 + u, seg, u));
            }
        }
        let (_, s_star, seg, u) = best.unwrap_or_else(|| {
            // empty window: fall back to the end of the path
            let seg = self.segments.last().expect("path is non-empty");
            (0.0, self.total_length, seg, seg.length)
        });
        let (f_a, theta_c) = seg.local_point(u);
        let offset = q - f_a;
        let side = cross(&heading(theta_c), &offset);
        let y_d = if side < 0.0 {
            -offset.norm()
        } else {
            offset.norm()
        };
        FrenetState {
            s_star,
            f_a,
            y_d,
            theta_d: normalize_angle(pose.theta - theta_c),
            theta_c,
            curvature: seg.curvature,
        }
    }

    /// Rigidly moves the whole path by `transform`.
    pub fn transformed(&self, transform: &Pose) -> Path {
        let segments = self
            .segments
            .iter()
            .map(|seg| Segment {
                start: transform.compose(&seg.start),
                ..*seg
            })
            .collect();
        Path {
            segments,
            total_length: self.total_length,
        }
    }

    /// Mirror image about the start pose's heading axis.
    pub fn mirrored(&self) -> Path {
        let start = self.start_pose();
        let pieces: Vec<_> = self
            .segments
            .iter()
            .map(|seg| (seg.length, -seg.curvature))
            .collect();
        Path::chain(start, &pieces).expect("mirroring preserves validity")
    }

    /// Curvature is zero on `[s, s + horizon]`.
    pub fn is_straight_ahead(&self, s: f64, horizon: f64) -> bool {
        let end = s + horizon;
        self.segment_offsets().all(|(s0, seg)| {
            let overlaps = s0 <= end && s0 + seg.length > s;
            !overlaps || seg.curvature == 0.0
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StudyShape {
    I,
    C,
    S,
}

impl StudyShape {
    pub const ALL: [StudyShape; 3] = [StudyShape::I, StudyShape::C, StudyShape::S];

    pub fn label(&self) -> &'static str {
        match self {
            StudyShape::I => "I",
            StudyShape::C => "C",
            StudyShape::S => "S",
        }
    }
}

impl fmt::Display for StudyShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StudyShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "I" | "i" => Ok(StudyShape::I),
            "C" | "c" => Ok(StudyShape::C),
            "S" | "s" => Ok(StudyShape::S),
            other => Err(format!("unknown path shape '{other}' (expected I, C or S)")),
        }
    }
}

/// Builds one of the study paths starting at `start`.
///
/// * `I`: a 10 m line.
/// * `C`: a quarter circle of radius 6.37 m.
/// * `S`: three arcs of radius 4.78 m sweeping 1/12, 1/6 and 1/12 of a
///   full turn, the middle one bent the other way.
///
/// `mirrored` flips every curvature sign.
pub fn make_study_path(shape: StudyShape, mirrored: bool, start: Pose) -> Path {
    let sign = if mirrored { -1.0 } else { 1.0 };
    let pieces: Vec<(f64, f64)> = match shape {
        StudyShape::I => vec![(I_LENGTH, 0.0)],
        StudyShape::C => vec![(C_RADIUS * PI / 2.0, sign / C_RADIUS)],
        StudyShape::S => {
            let k = sign / S_RADIUS;
            vec![
                (S_RADIUS * PI / 6.0, k),
                (S_RADIUS * PI / 3.0, -k),
                (S_RADIUS * PI / 6.0, k),
            ]
        }
    };
    Path::chain(start, &pieces).expect("study paths are valid")
}
