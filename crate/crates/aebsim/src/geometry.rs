//! Planar geometry primitives shared by the world model and the sensor models:
//! oriented rectangles, segment intersection tests and rectangle separation
//! distance.

use serde::{Deserialize, Serialize};

/// Pose in the world frame. `x` points along the ego lane, `y` is lateral,
/// `heading` is measured counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }

    /// Euclidean distance between the two pose origins.
    pub fn distance_to(&self, other: &Pose2) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// 2D point, used for sample points and polygon corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: Point2) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// Oriented rectangle: center pose plus full length (along heading) and width.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub center: Pose2,
    pub length: f64,
    pub width: f64,
}

impl Rect {
    pub fn new(center: Pose2, length: f64, width: f64) -> Self {
        Self {
            center,
            length,
            width,
        }
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Point2; 4] {
        let (s, c) = self.center.heading.sin_cos();
        let hl = self.length / 2.0;
        let hw = self.width / 2.0;
        let corner = |lx: f64, ly: f64| Point2 {
            x: self.center.x + c * lx - s * ly,
            y: self.center.y + s * lx + c * ly,
        };
        [
            corner(hl, hw),
            corner(-hl, hw),
            corner(-hl, -hw),
            corner(hl, -hw),
        ]
    }

    /// Transform a world point into this rectangle's body frame.
    fn local_point(&self, p: Point2) -> Point2 {
        let (s, c) = self.center.heading.sin_cos();
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        Point2 {
            x: c * dx + s * dy,
            y: -s * dx + c * dy,
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        let l = self.local_point(p);
        l.x.abs() <= self.length / 2.0 && l.y.abs() <= self.width / 2.0
    }

    /// Closed intersection test between a segment and this rectangle.
    ///
    /// Works in the rectangle's body frame, where the rectangle is an AABB,
    /// using a slab (Liang-Barsky) clip. Touching counts as intersecting.
    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        let a = self.local_point(a);
        let b = self.local_point(b);
        let hx = self.length / 2.0;
        let hy = self.width / 2.0;

        let d = Point2::new(b.x - a.x, b.y - a.y);
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (p, q, h) in [(a.x, d.x, hx), (a.y, d.y, hy)] {
            if q.abs() < 1e-15 {
                if p.abs() > h {
                    return false;
                }
            } else {
                let mut ta = (-h - p) / q;
                let mut tb = (h - p) / q;
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }

    /// Entry distance of a ray (origin + unit direction) into this rectangle,
    /// if the ray hits it. Touching counts as a hit.
    pub fn ray_entry_distance(&self, origin: Point2, dir: (f64, f64)) -> Option<f64> {
        let o = self.local_point(origin);
        let (s, c) = self.center.heading.sin_cos();
        // Rotate direction into body frame.
        let dx = c * dir.0 + s * dir.1;
        let dy = -s * dir.0 + c * dir.1;
        let hx = self.length / 2.0;
        let hy = self.width / 2.0;

        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for (p, q, h) in [(o.x, dx, hx), (o.y, dy, hy)] {
            if q.abs() < 1e-15 {
                if p.abs() > h {
                    return None;
                }
            } else {
                let mut ta = (-h - p) / q;
                let mut tb = (h - p) / q;
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return None;
                }
            }
        }
        Some(t0)
    }

    /// Separating-axis overlap test. Closed: rectangles touching along an
    /// edge or at a corner count as overlapping.
    pub fn overlaps(&self, other: &Rect) -> bool {
        let ca = self.corners();
        let cb = other.corners();
        for rect in [self, other] {
            let (s, c) = rect.center.heading.sin_cos();
            for axis in [(c, s), (-s, c)] {
                let project = |pts: &[Point2; 4]| {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for p in pts {
                        let v = p.x * axis.0 + p.y * axis.1;
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    (lo, hi)
                };
                let (a_lo, a_hi) = project(&ca);
                let (b_lo, b_hi) = project(&cb);
                if a_hi < b_lo || b_hi < a_lo {
                    return false;
                }
            }
        }
        true
    }

    /// Minimum distance between the two rectangles, 0 when they overlap.
    pub fn separation(&self, other: &Rect) -> f64 {
        if self.overlaps(other) {
            return 0.0;
        }
        let ca = self.corners();
        let cb = other.corners();
        let mut best = f64::INFINITY;
        for i in 0..4 {
            let (a0, a1) = (ca[i], ca[(i + 1) % 4]);
            for j in 0..4 {
                let (b0, b1) = (cb[j], cb[(j + 1) % 4]);
                best = best.min(segment_distance(a0, a1, b0, b1));
            }
        }
        best
    }
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.distance_to(a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    p.distance_to(Point2::new(a.x + t * abx, a.y + t * aby))
}

fn segment_distance(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> f64 {
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * std::f64::consts::PI);
    if a <= -std::f64::consts::PI {
        a += 2.0 * std::f64::consts::PI;
    } else if a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x: f64, y: f64, heading: f64, l: f64, w: f64) -> Rect {
        Rect::new(Pose2::new(x, y, heading), l, w)
    }

    #[test]
    fn overlap_identical_poses() {
        let a = rect(1.0, 2.0, 0.3, 4.0, 2.0);
        assert!(a.overlaps(&a));
    }

    #[test]
    fn overlap_far_apart() {
        let a = rect(0.0, 0.0, 0.0, 5.0, 2.0);
        let b = rect(20.0, 0.0, 0.0, 5.0, 2.0);
        assert!(!a.overlaps(&b));
        assert!(a.separation(&b) > 10.0);
    }

    #[test]
    fn overlap_touching_edge_is_closed() {
        // Two unit squares sharing the edge x = 1.
        let a = rect(0.5, 0.0, 0.0, 1.0, 1.0);
        let b = rect(1.5, 0.0, 0.0, 1.0, 1.0);
        assert!(a.overlaps(&b));
        assert_eq!(a.separation(&b), 0.0);
    }

    #[test]
    fn segment_hits_rect() {
        let r = rect(5.0, 0.0, 0.0, 2.0, 2.0);
        assert!(r.intersects_segment(Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)));
        assert!(!r.intersects_segment(Point2::new(0.0, 5.0), Point2::new(10.0, 5.0)));
        // Segment ending before the rectangle.
        assert!(!r.intersects_segment(Point2::new(0.0, 0.0), Point2::new(3.0, 0.0)));
    }

    #[test]
    fn ray_entry() {
        let r = rect(10.0, 0.0, 0.0, 4.0, 2.0);
        let d = r
            .ray_entry_distance(Point2::new(0.0, 0.0), (1.0, 0.0))
            .unwrap();
        assert!((d - 8.0).abs() < 1e-12);
        assert!(r
            .ray_entry_distance(Point2::new(0.0, 0.0), (0.0, 1.0))
            .is_none());
        // Ray starting inside reports zero.
        let inside = r
            .ray_entry_distance(Point2::new(10.0, 0.0), (1.0, 0.0))
            .unwrap();
        assert_eq!(inside, 0.0);
    }

    #[test]
    fn rotated_overlap() {
        let a = rect(0.0, 0.0, 0.0, 4.0, 2.0);
        let b = rect(2.9, 0.0, std::f64::consts::FRAC_PI_4, 2.0, 2.0);
        assert!(a.overlaps(&b));
        let c = rect(4.5, 0.0, std::f64::consts::FRAC_PI_4, 2.0, 2.0);
        assert!(!a.overlaps(&c));
    }

    #[test]
    fn wrap_angle_range() {
        for a in [-10.0, -3.2, 0.0, 3.2, 10.0, 100.0] {
            let w = wrap_angle(a);
            assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
        }
    }
}
