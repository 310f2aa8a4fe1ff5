//! Planar primitives with exact sign predicates.
//!
//! Membership tests feed realizability checks that are required to come out
//! exactly zero, so every comparison against a geometric boundary is decided
//! in real arithmetic: a cheap floating-point filter first, and an exact
//! rational fallback when the filter cannot certify the sign.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point { x: v[0], y: v[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
    Collinear,
}

/// Exact orientation of the triple (a, b, c); positive area = counterclockwise.
pub fn orient2d(a: Point, b: Point, c: Point) -> Orientation {
    let det = robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    );
    match det.partial_cmp(&0.0).expect("orient2d is never NaN on finite input") {
        Ordering::Greater => Orientation::CounterClockwise,
        Ordering::Less => Orientation::Clockwise,
        Ordering::Equal => Orientation::Collinear,
    }
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Exact sign of |p - center|^2 - radius^2.
///
/// `Less` means strictly inside the disk, `Equal` on the circle, `Greater`
/// strictly outside. The filter bound is a standard running-error estimate
/// for the five-operation expression; anything inside the bound goes to the
/// rational path.
pub fn disk_cmp(p: Point, center: Point, radius: f64) -> Ordering {
    let dx = p.x - center.x;
    let dy = p.y - center.y;
    let sx = dx * dx;
    let sy = dy * dy;
    let rr = radius * radius;
    let det = (sx + sy) - rr;
    let err = 8.0 * f64::EPSILON * (sx + sy + rr);
    if det > err {
        return Ordering::Greater;
    }
    if det < -err {
        return Ordering::Less;
    }
    let dx = rat(p.x) - rat(center.x);
    let dy = rat(p.y) - rat(center.y);
    let r = rat(radius);
    let exact = &dx * &dx + &dy * &dy - &r * &r;
    exact.cmp(&BigRational::zero())
}

/// Exact sign of normal . p - offset.
pub fn halfplane_cmp(p: Point, normal: Point, offset: f64) -> Ordering {
    let s1 = normal.x * p.x;
    let s2 = normal.y * p.y;
    let det = (s1 + s2) - offset;
    let err = 8.0 * f64::EPSILON * (s1.abs() + s2.abs() + offset.abs());
    if det > err {
        return Ordering::Greater;
    }
    if det < -err {
        return Ordering::Less;
    }
    let exact = rat(normal.x) * rat(p.x) + rat(normal.y) * rat(p.y) - rat(offset);
    exact.cmp(&BigRational::zero())
}

pub fn dist_sq(a: Point, b: Point) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

pub fn dist(a: Point, b: Point) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Convex hull by monotone chain with exact orientation tests.
///
/// Returns the hull vertices in counterclockwise order, first vertex the
/// lexicographic minimum, collinear intermediate points dropped. Degenerate
/// inputs yield 0, 1, or 2 points (empty set, single point, segment).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    pts.dedup_by(|p, q| p.x == q.x && p.y == q.y);
    let n = pts.len();
    if n <= 2 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * n);
    for &p in &pts {
        while hull.len() >= 2
            && orient2d(hull[hull.len() - 2], hull[hull.len() - 1], p)
                != Orientation::CounterClockwise
        {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && orient2d(hull[hull.len() - 2], hull[hull.len() - 1], p)
                != Orientation::CounterClockwise
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    if orient2d(a, b, p) != Orientation::Collinear {
        return false;
    }
    let (xlo, xhi) = if a.x <= b.x { (a.x, b.x) } else { (b.x, a.x) };
    let (ylo, yhi) = if a.y <= b.y { (a.y, b.y) } else { (b.y, a.y) };
    xlo <= p.x && p.x <= xhi && ylo <= p.y && p.y <= yhi
}

/// Closed membership in the convex hull given as a counterclockwise vertex
/// list; boundary points count as inside. Accepts the degenerate 0-, 1-, and
/// 2-vertex hulls produced by [`convex_hull`].
pub fn point_in_hull(hull: &[Point], p: Point) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0].x == p.x && hull[0].y == p.y,
        2 => on_segment(hull[0], hull[1], p),
        n => {
            for i in 0..n {
                let a = hull[i];
                let b = hull[(i + 1) % n];
                if orient2d(a, b, p) == Orientation::Clockwise {
                    return false;
                }
            }
            true
        }
    }
}

/// A vertex list describes a strictly convex counterclockwise polygon iff its
/// convex hull has the same length and is a cyclic rotation of the input.
pub fn is_strictly_convex_ccw(vertices: &[Point]) -> bool {
    let n = vertices.len();
    if n < 3 || vertices.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let hull = convex_hull(vertices);
    if hull.len() != n {
        return false;
    }
    let start = match vertices
        .iter()
        .position(|v| v.x == hull[0].x && v.y == hull[0].y)
    {
        Some(i) => i,
        None => return false,
    };
    (0..n).all(|k| {
        let v = vertices[(start + k) % n];
        v.x == hull[k].x && v.y == hull[k].y
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_basic() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        assert_eq!(orient2d(a, b, Point::new(0.0, 1.0)), Orientation::CounterClockwise);
        assert_eq!(orient2d(a, b, Point::new(0.0, -1.0)), Orientation::Clockwise);
        assert_eq!(orient2d(a, b, Point::new(2.0, 0.0)), Orientation::Collinear);
    }

    #[test]
    fn orientation_near_degenerate_is_exact() {
        // Points on the line y = x with a one-ulp vertical nudge.
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1e16, 1e16);
        let c = Point::new(0.5e16, 0.5e16 + 2.0);
        assert_eq!(orient2d(a, b, c), Orientation::CounterClockwise);
        let c = Point::new(0.5e16, 0.5e16 - 2.0);
        assert_eq!(orient2d(a, b, c), Orientation::Clockwise);
        let c = Point::new(0.5e16, 0.5e16);
        assert_eq!(orient2d(a, b, c), Orientation::Collinear);
    }

    #[test]
    fn disk_cmp_is_exact_on_boundary() {
        let c = Point::new(0.0, 0.0);
        assert_eq!(disk_cmp(Point::new(3.0, 4.0), c, 5.0), Ordering::Equal);
        assert_eq!(disk_cmp(Point::new(3.0, 4.0000000001), c, 5.0), Ordering::Greater);
        assert_eq!(disk_cmp(Point::new(3.0, 3.9999999999), c, 5.0), Ordering::Less);
        assert_eq!(disk_cmp(c, c, 1.0), Ordering::Less);
    }

    #[test]
    fn halfplane_cmp_is_exact() {
        let n = Point::new(1.0, 1.0);
        assert_eq!(halfplane_cmp(Point::new(0.5, 0.5), n, 1.0), Ordering::Equal);
        assert_eq!(halfplane_cmp(Point::new(0.5, 0.6), n, 1.0), Ordering::Greater);
        assert_eq!(halfplane_cmp(Point::new(0.5, 0.4), n, 1.0), Ordering::Less);
    }

    #[test]
    fn hull_of_square_with_interior_and_edge_points() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 0.0),
        ];
        let hull = convex_hull(&pts);
        assert_eq!(
            hull,
            vec![
                Point::new(0.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(2.0, 2.0),
                Point::new(0.0, 2.0),
            ]
        );
    }

    #[test]
    fn hull_degenerate_inputs() {
        assert!(convex_hull(&[]).is_empty());
        assert_eq!(convex_hull(&[Point::new(1.0, 2.0)]), vec![Point::new(1.0, 2.0)]);
        let collinear = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 2.0),
            Point::new(3.0, 3.0),
        ];
        let hull = convex_hull(&collinear);
        assert_eq!(hull, vec![Point::new(0.0, 0.0), Point::new(3.0, 3.0)]);
    }

    #[test]
    fn point_in_hull_cases() {
        let square = [
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        assert!(point_in_hull(&square, Point::new(1.0, 1.0)));
        assert!(point_in_hull(&square, Point::new(0.0, 1.0)));
        assert!(point_in_hull(&square, Point::new(2.0, 2.0)));
        assert!(!point_in_hull(&square, Point::new(2.0000001, 1.0)));

        let seg = [Point::new(0.0, 0.0), Point::new(2.0, 2.0)];
        assert!(point_in_hull(&seg, Point::new(1.0, 1.0)));
        assert!(!point_in_hull(&seg, Point::new(1.0, 1.0000001)));
        assert!(!point_in_hull(&seg, Point::new(3.0, 3.0)));

        let pt = [Point::new(1.0, 1.0)];
        assert!(point_in_hull(&pt, Point::new(1.0, 1.0)));
        assert!(!point_in_hull(&pt, Point::new(1.0, 1.5)));

        assert!(!point_in_hull(&[], Point::new(0.0, 0.0)));
    }

    #[test]
    fn convexity_validation() {
        let tri = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 2.0)];
        assert!(is_strictly_convex_ccw(&tri));
        // Clockwise.
        let cw = [Point::new(0.0, 0.0), Point::new(0.0, 2.0), Point::new(2.0, 0.0)];
        assert!(!is_strictly_convex_ccw(&cw));
        // Collinear vertex.
        let collinear = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 2.0),
        ];
        assert!(!is_strictly_convex_ccw(&collinear));
        // Pentagram ordering of convex-position points is rejected.
        let penta: Vec<Point> = (0..5)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64) / 5.0;
                Point::new(t.cos(), t.sin())
            })
            .collect();
        let star = [penta[0], penta[2], penta[4], penta[1], penta[3]];
        assert!(is_strictly_convex_ccw(&penta));
        assert!(!is_strictly_convex_ccw(&star));
    }
}
