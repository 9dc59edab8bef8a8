//! Oriented rectangles and separating-axis overlap tests.

use serde::{Deserialize, Serialize};

use crate::se2::Pose2;

/// Rectangle of `length` along the heading of `center` and `width` across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Pose2,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn new(center: Pose2, length: f64, width: f64) -> Self {
        Self { center, length, width }
    }

    /// Grows the box by `lon` at each end and `lat` at each side.
    pub fn inflated(&self, lon: f64, lat: f64) -> Self {
        Self {
            center: self.center,
            length: self.length + 2.0 * lon,
            width: self.width + 2.0 * lat,
        }
    }

    /// Corners counter-clockwise from front-left.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (hl, hw) = (0.5 * self.length, 0.5 * self.width);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)].map(|(x, y)| self.center.transform_point(x, y))
    }

    fn axes(&self) -> [(f64, f64); 2] {
        let (s, c) = self.center.theta.sin_cos();
        [(c, s), (-s, c)]
    }

    fn extent_on(&self, axis: (f64, f64)) -> (f64, f64) {
        let centre = self.center.x * axis.0 + self.center.y * axis.1;
        let [u, v] = self.axes();
        let r = 0.5 * self.length * (u.0 * axis.0 + u.1 * axis.1).abs()
            + 0.5 * self.width * (v.0 * axis.0 + v.1 * axis.1).abs();
        (centre - r, centre + r)
    }

    /// Largest gap between the two projections over the four candidate
    /// separating axes. Positive when the boxes are disjoint; otherwise the
    /// negated minimum penetration depth.
    pub fn separation(&self, other: &OrientedBox) -> f64 {
        self.axes()
            .into_iter()
            .chain(other.axes())
            .map(|axis| {
                let (a0, a1) = self.extent_on(axis);
                let (b0, b1) = other.extent_on(axis);
                (b0 - a1).max(a0 - b1)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Touching boxes count as overlapping.
    pub fn intersects(&self, other: &OrientedBox) -> bool {
        self.separation(other) <= 0.0
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        let (lx, ly) = self.center.inverse_transform_point(px, py);
        lx.abs() <= 0.5 * self.length && ly.abs() <= 0.5 * self.width
    }
}
