//! Four-axis Kiviat polygons and their exact intersection area.
//!
//! Axes sit at 0°, 90°, 180° and 270° for distance, time, transfers and
//! hops, so a polygon is the quadrilateral `(d,0) (0,t) (-x,0) (0,-h)`.

use serde::{Deserialize, Serialize};

use crate::route::RouteMetrics;

/// Criterion values scaled to `[0, 1]` per axis, in axis order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMetrics(pub [f64; 4]);

/// Divides every axis by its maximum over `routes`. An axis whose maximum
/// is zero stays zero.
pub fn normalize_metrics(routes: &[RouteMetrics]) -> Vec<NormalizedMetrics> {
    let mut max = [0.0f64; 4];
    for r in routes {
        for (m, v) in max.iter_mut().zip(r.as_axes()) {
            *m = m.max(v);
        }
    }
    routes
        .iter()
        .map(|r| {
            let raw = r.as_axes();
            NormalizedMetrics(std::array::from_fn(|i| if max[i] > 0.0 { raw[i] / max[i] } else { 0.0 }))
        })
        .collect()
}

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KiviatPolygon {
    /// Counter-clockwise: distance, time, transfers, hops axes.
    pub vertices: [Point; 4],
}

impl KiviatPolygon {
    pub fn new(distance: f64, time: f64, transfers: f64, hops: f64) -> Self {
        KiviatPolygon {
            vertices: [[distance, 0.0], [0.0, time], [-transfers, 0.0], [0.0, -hops]],
        }
    }

    pub fn from_normalized(n: NormalizedMetrics) -> Self {
        let [d, t, x, h] = n.0;
        KiviatPolygon::new(d, t, x, h)
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }
}

/// Shoelace area of a simple polygon (absolute value).
pub fn polygon_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..poly.len())
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    (twice / 2.0).abs()
}

fn side(a: Point, b: Point, p: Point) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

fn clip_halfplane(subject: &[Point], a: Point, b: Point) -> Vec<Point> {
    let n = subject.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let s = subject[i];
        let e = subject[(i + 1) % n];
        let (sc, ec) = (side(a, b, s), side(a, b, e));
        let (s_in, e_in) = (sc >= 0.0, ec >= 0.0);
        if s_in != e_in {
            let t = sc / (sc - ec);
            out.push([s[0] + (e[0] - s[0]) * t, s[1] + (e[1] - s[1]) * t]);
        }
        if e_in {
            out.push(e);
        }
    }
    out
}

/// Sutherland–Hodgman clip of `subject` against a counter-clockwise convex
/// `clip` polygon. Zero-length clip edges are skipped.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut result = subject.to_vec();
    for i in 0..clip.len() {
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        if a == b {
            continue;
        }
        result = clip_halfplane(&result, a, b);
        if result.len() < 3 {
            return Vec::new();
        }
    }
    result
}

/// Exact area shared by two Kiviat polygons. Degenerate polygons give 0.
pub fn intersection_area(a: &KiviatPolygon, b: &KiviatPolygon) -> f64 {
    if a.area() == 0.0 || b.area() == 0.0 {
        return 0.0;
    }
    polygon_area(&clip_convex(&a.vertices, &b.vertices))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond(d: f64, t: f64, x: f64, h: f64) -> KiviatPolygon {
        KiviatPolygon::new(d, t, x, h)
    }

    #[test]
    fn unit_diamond_self() {
        let u = diamond(1.0, 1.0, 1.0, 1.0);
        assert_eq!(u.area(), 2.0);
        assert_eq!(intersection_area(&u, &u), 2.0);
    }

    #[test]
    fn nested_half_diamond() {
        let u = diamond(1.0, 1.0, 1.0, 1.0);
        let h = diamond(0.5, 0.5, 0.5, 0.5);
        assert_eq!(intersection_area(&u, &h), 0.5);
        assert_eq!(intersection_area(&h, &u), 0.5);
    }

    #[test]
    fn area_formula() {
        let p = diamond(0.3, 0.9, 0.2, 0.7);
        assert!((p.area() - 0.5 * (0.3 + 0.2) * (0.9 + 0.7)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_is_zero() {
        let seg = diamond(1.0, 0.0, 1.0, 0.0);
        let u = diamond(1.0, 1.0, 1.0, 1.0);
        assert_eq!(intersection_area(&seg, &u), 0.0);
        assert_eq!(intersection_area(&u, &diamond(0.0, 0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn zero_axis_still_clips() {
        // transfers axis collapsed: a triangle-like polygon with a flat side
        let a = diamond(1.0, 1.0, 0.0, 1.0);
        let u = diamond(1.0, 1.0, 1.0, 1.0);
        assert!((intersection_area(&a, &u) - a.area()).abs() < 1e-12);
        assert!((intersection_area(&u, &a) - a.area()).abs() < 1e-12);
    }

    #[test]
    fn normalization_examples() {
        let m = |x: u32| RouteMetrics {
            distance_km: 1.0,
            time_s: 1.0,
            transfers: x,
            hops: 1,
        };
        let n = normalize_metrics(&[m(2), m(0), m(0), m(1), m(2)]);
        let got: Vec<f64> = n.iter().map(|v| v.0[2]).collect();
        assert_eq!(got, vec![1.0, 0.0, 0.0, 0.5, 1.0]);
        let zeros = normalize_metrics(&[m(0), m(0)]);
        assert!(zeros.iter().all(|v| v.0[2] == 0.0 && v.0[0] == 1.0));
    }
}
