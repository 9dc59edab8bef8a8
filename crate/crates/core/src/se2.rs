//! Planar rigid transforms.
//!
//! A [`Pose2`] is read as "frame B expressed in frame A": translation of B's
//! origin in A's axes, plus B's heading relative to A. Composition chains
//! frames left to right, so `compose(a, b)` is b's frame seen from a's parent.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut w = theta - two_pi * ((theta + PI) / two_pi).floor();
    // floor puts the result in [-pi, pi); fold the lower edge onto +pi
    if w <= -PI {
        w += two_pi;
    }
    if w > PI {
        w -= two_pi;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Default for Pose2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub const fn identity() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
        }
    }

    pub fn inverse(&self) -> Self {
        let (s, c) = self.theta.sin_cos();
        Self::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    /// Maps a point given in this pose's frame into the parent frame.
    pub fn transform_point(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (self.x + c * px - s * py, self.y + s * px + c * py)
    }

    /// Maps a point given in the parent frame into this pose's frame.
    pub fn inverse_transform_point(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = px - self.x;
        let dy = py - self.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    pub fn translation_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.theta]
    }

    /// Linear interpolation in position, shortest arc in heading.
    pub fn interpolate(&self, other: &Pose2, alpha: f64) -> Pose2 {
        let dtheta = wrap_angle(other.theta - self.theta);
        Pose2::new(
            self.x + alpha * (other.x - self.x),
            self.y + alpha * (other.y - self.y),
            self.theta + alpha * dtheta,
        )
    }
}

pub fn compose(a: &Pose2, b: &Pose2) -> Pose2 {
    let (x, y) = a.transform_point(b.x, b.y);
    Pose2::new(x, y, a.theta + b.theta)
}

pub fn invert(p: &Pose2) -> Pose2 {
    p.inverse()
}

/// Pose of `b` expressed in the frame of `a`.
pub fn relative(a: &Pose2, b: &Pose2) -> Pose2 {
    let (x, y) = a.inverse_transform_point(b.x, b.y);
    Pose2::new(x, y, b.theta - a.theta)
}
