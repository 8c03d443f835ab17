//! Planar geometry primitives shared across modules.

use serde::{Deserialize, Serialize};

/// A point in the projected planar frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Euclidean distance to another point.
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Distance from the origin.
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// Smallest distance from `p` to any of `centers`; `None` when empty.
pub fn min_distance_to(p: Point, centers: &[Point]) -> Option<f64> {
    centers
        .iter()
        .map(|c| p.distance(c))
        .min_by(|a, b| a.total_cmp(b))
}
