//! Small planar/3D collision helpers.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub fn rotate(v: &Vector2<f64>, yaw: f64) -> Vector2<f64> {
    let (s, c) = yaw.sin_cos();
    Vector2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

pub fn cross(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Oriented rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub center: Vector2<f64>,
    pub half: Vector2<f64>,
    pub yaw: f64,
}

/// Contact between a disc and a rectangle.
#[derive(Clone, Copy, Debug)]
pub struct DiscContact {
    /// Point on the rectangle boundary closest to the disc center.
    pub point: Vector2<f64>,
    /// Unit normal pointing from the rectangle toward the disc.
    pub normal: Vector2<f64>,
    /// Overlap depth, > 0 when penetrating.
    pub depth: f64,
    /// Gap between disc surface and rectangle, >= 0 when separate.
    pub gap: f64,
}

impl Rect {
    /// Axis-aligned half extents of the rotated rectangle.
    pub fn aabb_half(&self) -> Vector2<f64> {
        let (s, c) = self.yaw.sin_cos();
        Vector2::new(
            self.half.x * c.abs() + self.half.y * s.abs(),
            self.half.x * s.abs() + self.half.y * c.abs(),
        )
    }

    pub fn to_local(&self, p: &Vector2<f64>) -> Vector2<f64> {
        rotate(&(p - self.center), -self.yaw)
    }

    pub fn to_world(&self, p: &Vector2<f64>) -> Vector2<f64> {
        rotate(p, self.yaw) + self.center
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half.x && l.y.abs() <= self.half.y
    }

    pub fn corners(&self) -> [Vector2<f64>; 4] {
        let h = self.half;
        [
            self.to_world(&Vector2::new(h.x, h.y)),
            self.to_world(&Vector2::new(-h.x, h.y)),
            self.to_world(&Vector2::new(-h.x, -h.y)),
            self.to_world(&Vector2::new(h.x, -h.y)),
        ]
    }

    pub fn disc_contact(&self, center: &Vector2<f64>, radius: f64) -> DiscContact {
        let l = self.to_local(center);
        let h = self.half;
        let inside = l.x.abs() <= h.x && l.y.abs() <= h.y;
        if !inside {
            let q = Vector2::new(l.x.clamp(-h.x, h.x), l.y.clamp(-h.y, h.y));
            let d = l - q;
            let dist = d.norm();
            let n_local = if dist > 1e-15 { d / dist } else { Vector2::x() };
            DiscContact {
                point: self.to_world(&q),
                normal: rotate(&n_local, self.yaw),
                depth: radius - dist,
                gap: dist - radius,
            }
        } else {
            // Exit through the nearest face.
            let dx = h.x - l.x.abs();
            let dy = h.y - l.y.abs();
            let (q, n_local, to_face) = if dx <= dy {
                let s = if l.x >= 0.0 { 1.0 } else { -1.0 };
                (Vector2::new(s * h.x, l.y), Vector2::new(s, 0.0), dx)
            } else {
                let s = if l.y >= 0.0 { 1.0 } else { -1.0 };
                (Vector2::new(l.x, s * h.y), Vector2::new(0.0, s), dy)
            };
            DiscContact {
                point: self.to_world(&q),
                normal: rotate(&n_local, self.yaw),
                depth: radius + to_face,
                gap: -(radius + to_face),
            }
        }
    }

    /// Minimal translation moving `self` out of the axis-aligned box
    /// `(center, half)`, if they overlap.
    pub fn separation_from_aabb(&self, center: &Vector2<f64>, half: &Vector2<f64>) -> Option<Vector2<f64>> {
        let other = Rect {
            center: *center,
            half: *half,
            yaw: 0.0,
        };
        let axes = [
            Vector2::x(),
            Vector2::y(),
            rotate(&Vector2::x(), self.yaw),
            rotate(&Vector2::y(), self.yaw),
        ];
        let mut best: Option<(f64, Vector2<f64>)> = None;
        for axis in axes {
            let (a0, a1) = project(&self.corners(), &axis);
            let (b0, b1) = project(&other.corners(), &axis);
            let overlap = a1.min(b1) - a0.max(b0);
            if overlap <= 0.0 {
                return None;
            }
            if best.map(|(o, _)| overlap < o).unwrap_or(true) {
                let dir = if (self.center - center).dot(&axis) >= 0.0 { axis } else { -axis };
                best = Some((overlap, dir));
            }
        }
        best.map(|(o, d)| d * o)
    }
}

fn project(points: &[Vector2<f64>; 4], axis: &Vector2<f64>) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let v = p.dot(axis);
        (lo.min(v), hi.max(v))
    })
}

/// Axis-aligned box in 3D.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb3 {
    pub center: Vector3<f64>,
    pub half: Vector3<f64>,
}

impl Aabb3 {
    pub fn contains(&self, p: &Vector3<f64>, margin: f64) -> bool {
        (0..3).all(|i| (p[i] - self.center[i]).abs() < self.half[i] + margin)
    }

    pub fn top(&self) -> f64 {
        self.center.z + self.half.z
    }

    /// Whether the segment `a -> b` passes through the box inflated by `margin`.
    pub fn intersects_segment(&self, a: &Vector3<f64>, b: &Vector3<f64>, margin: f64) -> bool {
        // Slab test.
        let d = b - a;
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        for i in 0..3 {
            let lo = self.center[i] - self.half[i] - margin;
            let hi = self.center[i] + self.half[i] + margin;
            if d[i].abs() < 1e-15 {
                if a[i] <= lo || a[i] >= hi {
                    return false;
                }
            } else {
                let mut ta = (lo - a[i]) / d[i];
                let mut tb = (hi - a[i]) / d[i];
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 >= t1 {
                    return false;
                }
            }
        }
        true
    }
}
