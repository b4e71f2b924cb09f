//! Small planar/volumetric geometry helpers shared by the propagation and
//! trajectory modules. Coordinates are metres.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<F> {
    pub x: F,
    pub y: F,
}

impl<F: Real> Point2<F> {
    pub fn new(x: F, y: F) -> Self {
        Point2 { x, y }
    }

    pub fn distance(&self, other: &Point2<F>) -> F {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3<F> {
    pub x: F,
    pub y: F,
    pub z: F,
}

impl<F: Real> Point3<F> {
    pub fn new(x: F, y: F, z: F) -> Self {
        Point3 { x, y, z }
    }

    pub fn distance(&self, other: &Point3<F>) -> F {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Axis-aligned rectangle, corner `(x, y)` plus extent `(w, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<F> {
    pub x: F,
    pub y: F,
    pub w: F,
    pub h: F,
}

impl<F: Real> Rect<F> {
    pub fn new(x: F, y: F, w: F, h: F) -> Self {
        Rect { x, y, w, h }
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Point2<F>) -> bool {
        p.x >= self.x && p.x <= self.x + self.w && p.y >= self.y && p.y <= self.y + self.h
    }

    pub fn area(&self) -> F {
        self.w * self.h
    }

    pub fn center(&self) -> Point2<F> {
        let half = F::of(0.5);
        Point2::new(self.x + self.w * half, self.y + self.h * half)
    }
}
