//! Convex polygons and exact intersection areas via half-plane clipping.

use super::Point;

/// A convex polygon stored with positive signed area (counter-clockwise in
/// the algebraic sense; on a y-down image this renders clockwise).
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

fn signed_area2(ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut acc = 0.0;
    for i in 0..n {
        let (x0, y0) = ring[i];
        let (x1, y1) = ring[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc
}

impl ConvexPolygon {
    /// Builds from a convex vertex ring, reversing if needed so the signed
    /// area is non-negative.
    pub fn from_ring(ring: &[Point]) -> Self {
        let mut vertices: Vec<Point> = ring.to_vec();
        if signed_area2(&vertices) < 0.0 {
            vertices.reverse();
        }
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        if self.vertices.len() < 3 {
            return 0.0;
        }
        signed_area2(&self.vertices).abs() / 2.0
    }

    /// Clips this polygon against the half-plane on the interior side of the
    /// directed edge `a -> b` (interior = non-negative cross product for a
    /// positively oriented clip polygon).
    fn clip_edge(&self, a: Point, b: Point) -> ConvexPolygon {
        let inside = |p: Point| -> f64 {
            (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
        };
        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let cur = self.vertices[i];
            let next = self.vertices[(i + 1) % n];
            let c_in = inside(cur);
            let n_in = inside(next);
            if c_in >= 0.0 {
                out.push(cur);
            }
            if (c_in > 0.0 && n_in < 0.0) || (c_in < 0.0 && n_in > 0.0) {
                let t = c_in / (c_in - n_in);
                out.push((cur.0 + t * (next.0 - cur.0), cur.1 + t * (next.1 - cur.1)));
            }
        }
        ConvexPolygon { vertices: out }
    }
}

/// Area of the intersection of two convex polygons (Sutherland-Hodgman
/// clipping followed by the shoelace formula). Returns 0 for an empty
/// intersection; symmetric in its arguments up to floating-point rounding.
pub fn polygon_intersection_area(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    if a.vertices.len() < 3 || b.vertices.len() < 3 {
        return 0.0;
    }
    let mut clipped = a.clone();
    let n = b.vertices.len();
    for i in 0..n {
        if clipped.vertices.len() < 3 {
            return 0.0;
        }
        clipped = clipped.clip_edge(b.vertices[i], b.vertices[(i + 1) % n]);
    }
    clipped.area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_square_at(cx: f64, cy: f64) -> ConvexPolygon {
        ConvexPolygon::from_ring(&[
            (cx - 0.5, cy - 0.5),
            (cx + 0.5, cy - 0.5),
            (cx + 0.5, cy + 0.5),
            (cx - 0.5, cy + 0.5),
        ])
    }

    #[test]
    fn identical_squares_intersect_fully() {
        let a = unit_square_at(0.0, 0.0);
        let area = polygon_intersection_area(&a, &a.clone());
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_squares_intersect_nowhere() {
        let a = unit_square_at(0.0, 0.0);
        let b = unit_square_at(5.0, 5.0);
        assert_eq!(polygon_intersection_area(&a, &b), 0.0);
    }

    #[test]
    fn square_vs_rotated_square_is_octagon() {
        let a = unit_square_at(0.0, 0.0);
        let t = PI / 4.0;
        let rot = |p: (f64, f64)| {
            (
                p.0 * t.cos() - p.1 * t.sin(),
                p.0 * t.sin() + p.1 * t.cos(),
            )
        };
        let b = ConvexPolygon::from_ring(&[
            rot((-0.5, -0.5)),
            rot((0.5, -0.5)),
            rot((0.5, 0.5)),
            rot((-0.5, 0.5)),
        ]);
        let expect = 2.0 * (2.0_f64.sqrt() - 1.0);
        let got = polygon_intersection_area(&a, &b);
        assert!((got - expect).abs() < 1e-9, "got {got}, want {expect}");
        // symmetry in arguments
        let rev = polygon_intersection_area(&b, &a);
        assert!((got - rev).abs() < 1e-9);
    }

    #[test]
    fn orientation_is_normalized() {
        let ccw = ConvexPolygon::from_ring(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let cw = ConvexPolygon::from_ring(&[(0.0, 1.0), (1.0, 1.0), (1.0, 0.0), (0.0, 0.0)]);
        assert!((ccw.area() - 1.0).abs() < 1e-12);
        assert!((cw.area() - 1.0).abs() < 1e-12);
        assert!((polygon_intersection_area(&ccw, &cw) - 1.0).abs() < 1e-12);
    }
}
