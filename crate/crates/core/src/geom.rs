//! Planar geometry: vectors, polylines and oriented boxes.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec2::ZERO
        }
    }

    /// Rotated by +90 degrees (points to the left of the direction).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Polyline with cached cumulative arc length.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pts: Vec<Vec2>,
    cum: Vec<f64>,
}

/// Result of projecting a point onto a polyline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point.
    pub offset: f64,
    /// Signed lateral distance, positive to the left of travel.
    pub lateral: f64,
    /// Unsigned distance to the foot point.
    pub distance: f64,
    pub heading: f64,
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicate points.
    pub fn new(points: &[Vec2]) -> Self {
        let mut pts: Vec<Vec2> = Vec::with_capacity(points.len());
        for &p in points {
            if pts.last().map_or(true, |q: &Vec2| q.dist(p) > 1e-12) {
                pts.push(p);
            }
        }
        let mut cum = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        for i in 0..pts.len() {
            if i > 0 {
                acc += pts[i].dist(pts[i - 1]);
            }
            cum.push(acc);
        }
        Polyline { pts, cum }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.pts
    }

    pub fn length(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    fn segment_at(&self, s: f64) -> usize {
        if self.pts.len() < 2 {
            return 0;
        }
        let idx = self.cum.partition_point(|&c| c <= s);
        idx.clamp(1, self.pts.len() - 1) - 1
    }

    /// Point and heading at arc length `s`, extrapolated linearly past the ends.
    pub fn sample(&self, s: f64) -> (Vec2, f64) {
        match self.pts.len() {
            0 => (Vec2::ZERO, 0.0),
            1 => (self.pts[0], 0.0),
            _ => {
                let i = self.segment_at(s);
                let a = self.pts[i];
                let b = self.pts[i + 1];
                let seg = b - a;
                let len = seg.norm();
                let t = (s - self.cum[i]) / len;
                (a + seg * t, seg.angle())
            }
        }
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.sample(s).1
    }

    pub fn project(&self, p: Vec2) -> Projection {
        if self.pts.len() < 2 {
            let q = self.pts.first().copied().unwrap_or(Vec2::ZERO);
            return Projection {
                offset: 0.0,
                lateral: 0.0,
                distance: p.dist(q),
                heading: 0.0,
            };
        }
        let mut best = Projection {
            offset: 0.0,
            lateral: 0.0,
            distance: f64::INFINITY,
            heading: 0.0,
        };
        let last = self.pts.len() - 2;
        for i in 0..=last {
            let a = self.pts[i];
            let b = self.pts[i + 1];
            let seg = b - a;
            let len2 = seg.dot(seg);
            let mut t = (p - a).dot(seg) / len2;
            // the first and last segments extend past the ends
            if i > 0 {
                t = t.max(0.0);
            }
            if i < last {
                t = t.min(1.0);
            }
            let foot = a + seg * t;
            let d = p.dist(foot);
            if d < best.distance - 1e-12 {
                let dir = seg.normalized();
                best = Projection {
                    offset: self.cum[i] + t * len2.sqrt(),
                    lateral: dir.cross(p - a),
                    distance: d,
                    heading: seg.angle(),
                };
            }
        }
        best
    }
}

/// Oriented rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obb {
    pub center: Vec2,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl Obb {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        Obb {
            center,
            heading,
            half_length: length / 2.0,
            half_width: width / 2.0,
        }
    }

    pub fn axes(&self) -> [Vec2; 2] {
        let u = Vec2::from_angle(self.heading);
        [u, u.perp()]
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let [u, v] = self.axes();
        let a = u * self.half_length;
        let b = v * self.half_width;
        let c = self.center;
        [c + a + b, c - a + b, c - a - b, c + a - b]
    }

    fn radius_on(&self, axis: Vec2) -> f64 {
        let [u, v] = self.axes();
        self.half_length * u.dot(axis).abs() + self.half_width * v.dot(axis).abs()
    }

    /// Minimum overlap over the separating axes. Negative when separated.
    pub fn penetration(&self, other: &Obb) -> f64 {
        let d = other.center - self.center;
        let mut min_overlap = f64::INFINITY;
        for axis in self.axes().into_iter().chain(other.axes()) {
            let overlap = self.radius_on(axis) + other.radius_on(axis) - d.dot(axis).abs();
            min_overlap = min_overlap.min(overlap);
        }
        min_overlap
    }

    /// True when the boxes overlap by more than `tolerance` on every axis.
    pub fn collides(&self, other: &Obb, tolerance: f64) -> bool {
        self.penetration(other) > tolerance
    }

    /// Boundary-to-boundary distance, zero when overlapping.
    pub fn distance(&self, other: &Obb) -> f64 {
        if self.penetration(other) >= 0.0 {
            return 0.0;
        }
        let a = self.corners();
        let b = other.corners();
        let mut best = f64::INFINITY;
        for i in 0..4 {
            for j in 0..4 {
                best = best.min(point_segment_distance(a[i], b[j], b[(j + 1) % 4]));
                best = best.min(point_segment_distance(b[j], a[i], a[(i + 1) % 4]));
            }
        }
        best
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}
