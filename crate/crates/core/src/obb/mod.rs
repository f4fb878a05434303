//! Rotated-rectangle geometry: box parameterization, corner construction,
//! exact polygon IoU, and angle-aware soft non-maximum suppression.
//!
//! Conventions used everywhere in this crate:
//! - image coordinates with the y axis pointing down;
//! - the rotation matrix is `[[cos t, -sin t], [sin t, cos t]]`, so positive
//!   angles turn clockwise on screen;
//! - box angles are canonical in `[-pi/2, pi/2)` and the box width is measured
//!   along the angle direction.

mod nms;
mod polygon;

pub use nms::angle_soft_nms;
pub use polygon::{polygon_intersection_area, ConvexPolygon};

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// A 2-D point or vector in pixel coordinates.
pub type Point = (f64, f64);

/// The seven-value box parameterization produced by the detector: center
/// `(cx, cy)`, size `(w, h)`, rotation `theta`, and sub-cell offset `(dx, dy)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Septet {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Septet {
    /// Builds a septet, canonicalizing the angle into `[-pi/2, pi/2)`.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64, dx: f64, dy: f64) -> Result<Self> {
        if !(cx.is_finite() && cy.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(invalid("septet has non-finite center or size"));
        }
        if !theta.is_finite() || !dx.is_finite() || !dy.is_finite() {
            return Err(invalid("septet has non-finite angle or offset"));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(invalid(format!("septet size must be positive, got w={w}, h={h}")));
        }
        Ok(Self {
            cx,
            cy,
            w,
            h,
            theta: canonicalize_angle(theta),
            dx,
            dy,
        })
    }

    /// An axis-aligned box with zero offset.
    pub fn axis_aligned(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx, cy, w, h, 0.0, 0.0, 0.0).expect("finite axis-aligned box")
    }

    /// The effective center once the offset is applied.
    pub fn center(&self) -> Point {
        (self.cx + self.dx, self.cy + self.dy)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// The same rectangle rotated by `phi` about `pivot` (angle canonicalized).
    pub fn rotated_about(&self, pivot: Point, phi: f64) -> Septet {
        let m = rotation_matrix(phi).expect("finite rotation angle");
        let (cx, cy) = self.center();
        let v = (cx - pivot.0, cy - pivot.1);
        let r = m.apply(v);
        Septet {
            cx: pivot.0 + r.0,
            cy: pivot.1 + r.1,
            w: self.w,
            h: self.h,
            theta: canonicalize_angle(self.theta + phi),
            dx: 0.0,
            dy: 0.0,
        }
    }
}

/// The four corners of an oriented box, labeled by their position in the
/// unrotated frame (left/right x top/bottom).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerBox {
    pub lt: Point,
    pub rt: Point,
    pub lb: Point,
    pub rb: Point,
}

impl CornerBox {
    /// Corners in a closed convex order: lt, rt, rb, lb.
    pub fn ring(&self) -> [Point; 4] {
        [self.lt, self.rt, self.rb, self.lb]
    }

    pub fn centroid(&self) -> Point {
        (
            (self.lt.0 + self.rt.0 + self.lb.0 + self.rb.0) / 4.0,
            (self.lt.1 + self.rt.1 + self.lb.1 + self.rb.1) / 4.0,
        )
    }
}

/// One scored, classified oriented box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub box_: Septet,
    pub class_id: usize,
    pub score: f64,
}

impl Detection {
    pub fn new(box_: Septet, class_id: usize, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(invalid(format!("detection score {score} outside [0, 1]")));
        }
        Ok(Self {
            box_,
            class_id,
            score,
        })
    }
}

/// A 2x2 rotation matrix in row-major order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix {
    pub m: [[f64; 2]; 2],
}

impl RotationMatrix {
    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        (
            self.m[0][0] * p.0 + self.m[0][1] * p.1,
            self.m[1][0] * p.0 + self.m[1][1] * p.1,
        )
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

/// `[[cos t, -sin t], [sin t, cos t]]`; determinant is exactly 1 up to
/// floating-point rounding.
pub fn rotation_matrix(theta: f64) -> Result<RotationMatrix> {
    if !theta.is_finite() {
        return Err(invalid("rotation angle must be finite"));
    }
    let (s, c) = theta.sin_cos();
    Ok(RotationMatrix {
        m: [[c, -s], [s, c]],
    })
}

/// Wraps an angle into `[-pi/2, pi/2)` by multiples of pi. A rectangle is
/// invariant under a half-turn of its frame, so this loses nothing.
pub fn canonicalize_angle(theta: f64) -> f64 {
    let mut t = (theta + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    // rem_euclid can land exactly on pi/2 through rounding.
    if t >= FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Constructs the four corners of the oriented box described by a septet:
/// each half-size corner offset is rotated and translated to the offset
/// center.
pub fn corners_from_septet(s: &Septet) -> Result<CornerBox> {
    if s.w <= 0.0 || s.h <= 0.0 {
        return Err(invalid("corner construction requires positive size"));
    }
    let m = rotation_matrix(s.theta)?;
    let (cx, cy) = s.center();
    let place = |px: f64, py: f64| -> Point {
        let r = m.apply((px, py));
        (cx + r.0, cy + r.1)
    };
    let hw = s.w / 2.0;
    let hh = s.h / 2.0;
    Ok(CornerBox {
        lt: place(-hw, -hh),
        rt: place(hw, -hh),
        lb: place(-hw, hh),
        rb: place(hw, hh),
    })
}

fn sub(a: Point, b: Point) -> Point {
    (a.0 - b.0, a.1 - b.1)
}

fn norm(v: Point) -> f64 {
    v.0.hypot(v.1)
}

/// Recovers a septet from labeled corners, folding any offset into the
/// center (`dx = dy = 0`). The width is measured along the top edge and the
/// angle canonicalized, so `(w, h, theta)` and `(h, w, theta + pi/2)` collapse
/// to the same representation.
pub fn septet_from_corners(c: &CornerBox) -> Result<Septet> {
    let top = sub(c.rt, c.lt);
    let left = sub(c.lb, c.lt);
    let w = norm(top);
    let h = norm(left);
    if w * h <= 1e-12 {
        return Err(invalid("degenerate corner set with zero area"));
    }
    // Tolerances here mirror the documented 1e-4 contract on inputs.
    let tol = 1e-4 * (1.0 + w.max(h));
    let bottom = sub(c.rb, c.lb);
    let right = sub(c.rb, c.rt);
    if norm(sub(top, bottom)) > tol || norm(sub(left, right)) > tol {
        return Err(invalid("corner set is not a parallelogram"));
    }
    let dot = top.0 * left.0 + top.1 * left.1;
    if dot.abs() / (w * h) > 1e-4 {
        return Err(invalid("corner set is not rectangular"));
    }
    let (cx, cy) = c.centroid();
    let raw_theta = top.1.atan2(top.0);
    Septet::new(cx, cy, w, h, raw_theta, 0.0, 0.0)
}

/// Intersection-over-union of two oriented rectangles via exact convex
/// clipping. Zero-area degenerate pairs are defined to have IoU 0.
pub fn rotated_iou(a: &Septet, b: &Septet) -> f64 {
    let area_a = a.area();
    let area_b = b.area();
    if area_a <= 0.0 && area_b <= 0.0 {
        return 0.0;
    }
    let pa = ConvexPolygon::from_ring(&corners_from_septet(a).expect("valid septet").ring());
    let pb = ConvexPolygon::from_ring(&corners_from_septet(b).expect("valid septet").ring());
    let inter = polygon_intersection_area(&pa, &pb);
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn assert_point(p: Point, q: (f64, f64), tol: f64) {
        assert!(
            close(p.0, q.0, tol) && close(p.1, q.1, tol),
            "point {p:?} != {q:?}"
        );
    }

    #[test]
    fn rotation_matrix_identity_and_quarter_turn() {
        let id = rotation_matrix(0.0).unwrap();
        assert_eq!(id.m, [[1.0, 0.0], [0.0, 1.0]]);
        let q = rotation_matrix(FRAC_PI_2).unwrap();
        assert!(close(q.m[0][0], 0.0, 1e-15));
        assert!(close(q.m[0][1], -1.0, 1e-15));
        assert!(close(q.m[1][0], 1.0, 1e-15));
        assert!(close(q.m[1][1], 0.0, 1e-15));
        assert!(close(q.det(), 1.0, 1e-12));
    }

    #[test]
    fn rotation_matrix_pi_over_six() {
        let m = rotation_matrix(PI / 6.0).unwrap().m;
        assert!(close(m[0][0], 0.86603, 1e-5));
        assert!(close(m[0][1], -0.5, 1e-5));
        assert!(close(m[1][0], 0.5, 1e-5));
        assert!(close(m[1][1], 0.86603, 1e-5));
    }

    #[test]
    fn rotation_matrix_rejects_non_finite() {
        assert!(rotation_matrix(f64::NAN).is_err());
        assert!(rotation_matrix(f64::INFINITY).is_err());
    }

    #[test]
    fn corners_axis_aligned_unit_cases() {
        let s = Septet::new(0.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0).unwrap();
        let c = corners_from_septet(&s).unwrap();
        assert_point(c.lt, (-1.0, -1.0), 1e-12);
        assert_point(c.rt, (1.0, -1.0), 1e-12);
        assert_point(c.lb, (-1.0, 1.0), 1e-12);
        assert_point(c.rb, (1.0, 1.0), 1e-12);
    }

    #[test]
    fn corners_with_offset() {
        let s = Septet::new(5.0, 5.0, 2.0, 4.0, 0.0, 0.5, -0.5).unwrap();
        let c = corners_from_septet(&s).unwrap();
        assert_point(c.lt, (4.5, 2.5), 1e-12);
        assert_point(c.rt, (6.5, 2.5), 1e-12);
        assert_point(c.lb, (4.5, 6.5), 1e-12);
        assert_point(c.rb, (6.5, 6.5), 1e-12);
    }

    #[test]
    fn corners_rotated_quarter_pi() {
        let s = Septet::new(0.0, 0.0, 2.0, 2.0, PI / 4.0, 0.0, 0.0).unwrap();
        let c = corners_from_septet(&s).unwrap();
        let r2 = 2.0_f64.sqrt();
        assert_point(c.lt, (0.0, -r2), 1e-12);
        assert_point(c.rt, (r2, 0.0), 1e-12);
        assert_point(c.lb, (-r2, 0.0), 1e-12);
        assert_point(c.rb, (0.0, r2), 1e-12);
    }

    #[test]
    fn corner_invariants_hold() {
        let s = Septet::new(3.0, -2.0, 5.0, 1.5, 0.7, 0.2, -0.1).unwrap();
        let c = corners_from_septet(&s).unwrap();
        // right angles
        let top = sub(c.rt, c.lt);
        let left = sub(c.lb, c.lt);
        let cosang = (top.0 * left.0 + top.1 * left.1) / (norm(top) * norm(left));
        assert!(cosang.abs() < 1e-6);
        // centroid at offset center
        let (gx, gy) = c.centroid();
        assert!(close(gx, 3.2, 1e-6) && close(gy, -2.1, 1e-6));
    }

    #[test]
    fn septet_rejects_bad_values() {
        assert!(Septet::new(0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(Septet::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(Septet::new(0.0, 0.0, 1.0, 1.0, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn canonical_angle_range() {
        for &(input, expect) in &[
            (0.0, 0.0),
            (FRAC_PI_2, -FRAC_PI_2),
            (-FRAC_PI_2, -FRAC_PI_2),
            (PI, 0.0),
            (-PI, 0.0),
            (PI / 4.0 + PI, PI / 4.0),
            (100.0_f64.to_radians(), -80.0_f64.to_radians()),
        ] {
            let got = canonicalize_angle(input);
            assert!(close(got, expect, 1e-12), "canon({input}) = {got}, want {expect}");
            assert!((-FRAC_PI_2..FRAC_PI_2).contains(&got));
        }
    }

    #[test]
    fn septet_round_trips_axis_aligned() {
        let s = Septet::new(0.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0).unwrap();
        let c = corners_from_septet(&s).unwrap();
        let r = septet_from_corners(&c).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn septet_round_trips_rotated() {
        let s = Septet::new(0.0, 0.0, 2.0, 2.0, PI / 4.0, 0.0, 0.0).unwrap();
        let c = corners_from_septet(&s).unwrap();
        let r = septet_from_corners(&c).unwrap();
        // pi/4 canonicalizes to itself; sizes preserved
        assert!(close(r.theta, PI / 4.0, 1e-12));
        assert!(close(r.w, 2.0, 1e-12) && close(r.h, 2.0, 1e-12));
    }

    #[test]
    fn septet_from_corners_rejects_degenerate() {
        let c = CornerBox {
            lt: (0.0, 0.0),
            rt: (0.0, 0.0),
            lb: (0.0, 0.0),
            rb: (0.0, 0.0),
        };
        assert!(septet_from_corners(&c).is_err());
    }

    #[test]
    fn septet_from_corners_rejects_sheared() {
        let c = CornerBox {
            lt: (0.0, 0.0),
            rt: (2.0, 0.0),
            lb: (0.5, 1.0),
            rb: (2.5, 1.0),
        };
        assert!(septet_from_corners(&c).is_err());
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let a = Septet::axis_aligned(0.0, 0.0, 2.0, 2.0);
        let b = Septet::axis_aligned(10.0, 10.0, 2.0, 2.0);
        assert!(close(rotated_iou(&a, &a), 1.0, 1e-9));
        assert_eq!(rotated_iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_square_vs_rotated_copy_is_inverse_sqrt2() {
        let a = Septet::axis_aligned(0.0, 0.0, 1.0, 1.0);
        let b = Septet::new(0.0, 0.0, 1.0, 1.0, PI / 4.0, 0.0, 0.0).unwrap();
        let expect = 1.0 / 2.0_f64.sqrt();
        assert!(close(rotated_iou(&a, &b), expect, 1e-9));
    }

    #[test]
    fn iou_matches_axis_aligned_formula_for_upright_boxes() {
        let a = Septet::axis_aligned(0.0, 0.0, 4.0, 2.0);
        let b = Septet::axis_aligned(1.0, 0.5, 4.0, 2.0);
        // hand formula: overlap 3.0 x 1.5 = 4.5; union 16 - 4.5 = 11.5
        let expect = 4.5 / 11.5;
        assert!(close(rotated_iou(&a, &b), expect, 1e-9));
    }
}
