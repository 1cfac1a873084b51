use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

/// World-frame point in meters.
pub type Point = Vector2<f64>;

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2pi for tiny negative inputs
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Unit vector pointing along `theta`.
pub fn heading(theta: f64) -> Point {
    Point::new(theta.cos(), theta.sin())
}

/// z component of the planar cross product.
pub fn cross(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Planar position and heading of the walker in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn heading(&self) -> Point {
        heading(self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// Expresses a world point in this pose's body frame (x forward, y left).
    pub fn to_body(&self, p: &Point) -> Point {
        let d = p - self.position();
        let (s, c) = self.theta.sin_cos();
        Point::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }

    /// Maps a body-frame point back into the world frame.
    pub fn to_world(&self, p: &Point) -> Point {
        let (s, c) = self.theta.sin_cos();
        Point::new(self.x + c * p.x - s * p.y, self.y + s * p.x + c * p.y)
    }

    /// Composes a rigid transform `self` with `other` (`other` given in `self`'s frame).
    pub fn compose(&self, other: &Pose) -> Pose {
        let p = self.to_world(&other.position());
        Pose::new(p.x, p.y, self.theta + other.theta)
    }
}
