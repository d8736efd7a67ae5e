//! Plan-view geometry: points, axis-aligned boxes and simple polygons.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Tolerance used for on-edge tests, in meters.
pub(crate) const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn cross(&self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(&self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn lerp(&self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn from_points(points: &[Point]) -> Self {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Aabb { min, max }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x - EPS
            && p.x <= self.max.x + EPS
            && p.y >= self.min.y - EPS
            && p.y <= self.max.y + EPS
    }

    /// Whether the segment's own bounding box overlaps this box.
    pub fn overlaps_segment(&self, a: Point, b: Point) -> bool {
        a.x.max(b.x) >= self.min.x - EPS
            && a.x.min(b.x) <= self.max.x + EPS
            && a.y.max(b.y) >= self.min.y - EPS
            && a.y.min(b.y) <= self.max.y + EPS
    }
}

/// Signed shoelace area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| ring[i].cross(ring[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

pub fn centroid(ring: &[Point]) -> Point {
    let n = ring.len();
    let area = signed_area(ring);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        let c = p.cross(q);
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    Point::new(cx / (6.0 * area), cy / (6.0 * area))
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let ab = b - a;
    let len = ab.dot(ab).sqrt();
    if len < EPS {
        return p.distance(a) <= EPS;
    }
    if orient(a, b, p).abs() / len > EPS {
        return false;
    }
    let t = (p - a).dot(ab) / (len * len);
    (-EPS..=1.0 + EPS).contains(&t)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

/// Whether `p` lies on the ring's boundary.
pub fn on_boundary(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    (0..n).any(|i| on_segment(p, ring[i], ring[(i + 1) % n]))
}

/// Even-odd interior test; boundary points are reported as outside.
pub fn strictly_inside(p: Point, ring: &[Point]) -> bool {
    if on_boundary(p, ring) {
        return false;
    }
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (ring[i], ring[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x = pj.x + (p.y - pj.y) * (pi.x - pj.x) / (pi.y - pj.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Closed-footprint test: interior or boundary.
pub fn inside_closed(p: Point, ring: &[Point]) -> bool {
    on_boundary(p, ring) || strictly_inside(p, ring)
}

/// Whether any two non-adjacent edges of the ring touch or cross.
pub fn is_self_intersecting(ring: &[Point]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if adjacent {
                // Adjacent edges may only share their common vertex.
                let shared = if j == i + 1 { b } else { a };
                let (other_ab, other_cd) = if j == i + 1 { (a, d) } else { (b, c) };
                if orient(other_ab, shared, other_cd).abs() < EPS
                    && (other_cd - shared).dot(other_ab - shared) > 0.0
                {
                    return true;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

/// Parameters `t` in `[0, 1]` where segment `a -> b` meets the ring's edges,
/// including both endpoints of any collinear overlap. Unsorted.
pub(crate) fn segment_ring_params(a: Point, b: Point, ring: &[Point], out: &mut Vec<f64>) {
    let r = b - a;
    let rr = r.dot(r);
    let n = ring.len();
    for i in 0..n {
        let c = ring[i];
        let d = ring[(i + 1) % n];
        let s = d - c;
        let denom = r.cross(s);
        let qp = c - a;
        if denom.abs() <= EPS * (rr.sqrt() * s.dot(s).sqrt()).max(EPS) {
            // Parallel: only collinear overlap matters.
            if qp.cross(r).abs() <= EPS * rr.sqrt().max(EPS) && rr > 0.0 {
                for end in [c, d] {
                    let t = (end - a).dot(r) / rr;
                    if (0.0..=1.0).contains(&t) {
                        out.push(t);
                    }
                }
            }
            continue;
        }
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        if (-EPS..=1.0 + EPS).contains(&t) && (-EPS..=1.0 + EPS).contains(&u) {
            out.push(t.clamp(0.0, 1.0));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(0.0, 10.0),
        ]
    }

    #[test]
    fn area_and_centroid() {
        let sq = square();
        assert_eq!(signed_area(&sq), 100.0);
        assert_eq!(centroid(&sq), Point::new(5.0, 5.0));
    }

    #[test]
    fn interior_and_boundary() {
        let sq = square();
        assert!(strictly_inside(Point::new(5.0, 5.0), &sq));
        assert!(!strictly_inside(Point::new(10.0, 5.0), &sq));
        assert!(inside_closed(Point::new(10.0, 5.0), &sq));
        assert!(inside_closed(Point::new(0.0, 0.0), &sq));
        assert!(!inside_closed(Point::new(10.5, 5.0), &sq));
    }

    #[test]
    fn bowtie_is_self_intersecting() {
        let bow = vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(10.0, 0.0),
            Point::new(0.0, 10.0),
        ];
        assert!(is_self_intersecting(&bow));
        assert!(!is_self_intersecting(&square()));
    }

    #[test]
    fn spike_is_self_intersecting() {
        // Edge folds back onto its predecessor.
        let spike = vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(5.0, 0.0),
            Point::new(5.0, 5.0),
        ];
        assert!(is_self_intersecting(&spike));
    }

    #[test]
    fn collinear_overlap_reports_both_ends() {
        let mut out = Vec::new();
        segment_ring_params(Point::new(-5.0, 0.0), Point::new(15.0, 0.0), &square(), &mut out);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert_eq!(out, vec![0.25, 0.75]);
    }
}
