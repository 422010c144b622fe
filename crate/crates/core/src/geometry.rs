//! Planar geometry shared by the CSI forward model and the simulator.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A point or vector in the room plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    /// Closed containment.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Within `tol` of the perimeter and inside the tolerance-expanded rectangle.
    pub fn on_boundary(&self, p: Point2, tol: f64) -> bool {
        let inside = p.x >= self.min.x - tol
            && p.x <= self.max.x + tol
            && p.y >= self.min.y - tol
            && p.y <= self.max.y + tol;
        let near = (p.x - self.min.x).abs() <= tol
            || (p.x - self.max.x).abs() <= tol
            || (p.y - self.min.y).abs() <= tol
            || (p.y - self.max.y).abs() <= tol;
        inside && near
    }

    /// Inward unit normal of the wall closest to `p`.
    pub fn inward_normal(&self, p: Point2) -> Point2 {
        let d = [
            ((p.x - self.min.x).abs(), Point2::new(1.0, 0.0)),
            ((p.x - self.max.x).abs(), Point2::new(-1.0, 0.0)),
            ((p.y - self.min.y).abs(), Point2::new(0.0, 1.0)),
            ((p.y - self.max.y).abs(), Point2::new(0.0, -1.0)),
        ];
        d.iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, n)| *n)
            .unwrap_or(Point2::new(1.0, 0.0))
    }

    /// Specular reflection of a point that left the rectangle, together with
    /// the correspondingly mirrored heading.
    pub fn reflect(&self, mut p: Point2, mut heading: f64) -> (Point2, f64) {
        // a step is always far shorter than the room, so a few passes suffice
        for _ in 0..8 {
            let mut changed = false;
            if p.x < self.min.x {
                p.x = 2.0 * self.min.x - p.x;
                heading = std::f64::consts::PI - heading;
                changed = true;
            } else if p.x > self.max.x {
                p.x = 2.0 * self.max.x - p.x;
                heading = std::f64::consts::PI - heading;
                changed = true;
            }
            if p.y < self.min.y {
                p.y = 2.0 * self.min.y - p.y;
                heading = -heading;
                changed = true;
            } else if p.y > self.max.y {
                p.y = 2.0 * self.max.y - p.y;
                heading = -heading;
                changed = true;
            }
            if !changed {
                break;
            }
        }
        p.x = p.x.clamp(self.min.x, self.max.x);
        p.y = p.y.clamp(self.min.y, self.max.y);
        (p, wrap_angle(heading))
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Per-step kinematic state of the (single) target.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    /// Sampling rate in Hz; steps are `1 / f_s` apart.
    pub f_s: f64,
    pub pos: Vec<Point2>,
    /// Speed in m/s.
    pub speed: Vec<f64>,
    /// Heading of motion in radians.
    pub heading: Vec<f64>,
    pub inside: Vec<bool>,
}

impl Trajectory {
    pub fn with_capacity(f_s: f64, n: usize) -> Self {
        Self {
            f_s,
            pos: Vec::with_capacity(n),
            speed: Vec::with_capacity(n),
            heading: Vec::with_capacity(n),
            inside: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn push(&mut self, pos: Point2, speed: f64, heading: f64, inside: bool) {
        self.pos.push(pos);
        self.speed.push(speed);
        self.heading.push(heading);
        self.inside.push(inside);
    }

    pub fn velocity(&self, i: usize) -> Point2 {
        Point2::from_polar(self.speed[i], self.heading[i])
    }

    /// A target standing at `p` for `n` steps.
    pub fn stationary(p: Point2, n: usize, f_s: f64) -> Self {
        let mut t = Self::with_capacity(f_s, n);
        for _ in 0..n {
            t.push(p, 0.0, 0.0, true);
        }
        t
    }

    /// Constant-velocity straight-line motion starting at `start`.
    pub fn linear(start: Point2, velocity: Point2, n: usize, f_s: f64) -> Self {
        let mut t = Self::with_capacity(f_s, n);
        let dt = 1.0 / f_s;
        for i in 0..n {
            let p = start + velocity * (i as f64 * dt);
            t.push(p, velocity.norm(), velocity.angle(), true);
        }
        t
    }
}
