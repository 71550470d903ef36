//! Oriented rectangles on the image plane.
//!
//! A [`RotatedBox`] carries its own orientation `alpha`, the direction of
//! its h-axis measured from +u. A [`RadiusAlignedBox`] stores only center
//! and size; its h-axis always points away from the principal point, so the
//! orientation is derived rather than stored.

mod polygon;

use std::f64::consts::{PI, TAU};

pub use polygon::ConvexPolygon;

use crate::camera::ImagePoint;

/// Boxes with a side shorter than this (in their own units) are rejected.
pub const MIN_EXTENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate box: w={w}, h={h}")]
    Degenerate { w: f64, h: f64 },
    #[error("non-finite box parameter")]
    NonFinite,
    #[error("box center coincides with the principal point; radial direction undefined")]
    DegenerateRadial,
}

/// Wrap an angle to `(−π, π]`. Angles already in range are returned unchanged.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    alpha: f64,
}

impl RotatedBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, alpha: f64) -> Result<Self, GeometryError> {
        if ![cx, cy, w, h, alpha].iter().all(|x| x.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if w < MIN_EXTENT || h < MIN_EXTENT {
            return Err(GeometryError::Degenerate { w, h });
        }
        Ok(Self { cx, cy, w, h, alpha: wrap_angle(alpha) })
    }

    pub fn center(&self) -> ImagePoint {
        ImagePoint::new(self.cx, self.cy)
    }

    pub fn width(&self) -> f64 {
        self.w
    }

    pub fn height(&self) -> f64 {
        self.h
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Corners in counter-clockwise order, starting at local `(−w/2, −h/2)`.
    /// Local x runs along the w-axis `(sin α, −cos α)`, local y along the
    /// h-axis `(cos α, sin α)`.
    pub fn corners(&self) -> [ImagePoint; 4] {
        let (s, c) = self.alpha.sin_cos();
        let (hw, hh) = (0.5 * self.w, 0.5 * self.h);
        let at = |a: f64, b: f64| ImagePoint::new(self.cx + a * s + b * c, self.cy - a * c + b * s);
        [at(-hw, -hh), at(hw, -hh), at(hw, hh), at(-hw, hh)]
    }

    pub fn polygon(&self) -> ConvexPolygon {
        ConvexPolygon::from_ccw(self.corners().to_vec())
    }

    pub fn contains(&self, p: ImagePoint) -> bool {
        let (s, c) = self.alpha.sin_cos();
        let (du, dv) = (p.u - self.cx, p.v - self.cy);
        let a = du * s - dv * c;
        let b = du * c + dv * s;
        a.abs() <= 0.5 * self.w && b.abs() <= 0.5 * self.h
    }
}

/// Rotate a box about `pivot`: the center moves, `alpha` advances by `angle`.
pub fn rotate_box(b: &RotatedBox, angle: f64, pivot: ImagePoint) -> RotatedBox {
    if angle == 0.0 {
        return *b;
    }
    let c = b.center().rotate_about(&pivot, angle);
    RotatedBox {
        cx: c.u,
        cy: c.v,
        w: b.w,
        h: b.h,
        alpha: wrap_angle(b.alpha + angle),
    }
}

/// A box whose h-axis lies on the ray from the principal point through its
/// center. Two boxes are equal iff their four fields are equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusAlignedBox {
    pub cx: f64,
    pub cy: f64,
    /// Tangential extent.
    pub w: f64,
    /// Radial extent.
    pub h: f64,
}

impl RadiusAlignedBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        if ![cx, cy, w, h].iter().all(|x| x.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if w < MIN_EXTENT || h < MIN_EXTENT {
            return Err(GeometryError::Degenerate { w, h });
        }
        Ok(Self { cx, cy, w, h })
    }

    pub fn center(&self) -> ImagePoint {
        ImagePoint::new(self.cx, self.cy)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.cx, self.cy, self.w, self.h]
    }

    /// Radial direction of the center; 0 at the principal point itself.
    pub fn alpha(&self, principal: ImagePoint) -> f64 {
        (self.cy - principal.v).atan2(self.cx - principal.u)
    }

    pub fn to_rotated(&self, principal: ImagePoint) -> RotatedBox {
        RotatedBox {
            cx: self.cx,
            cy: self.cy,
            w: self.w,
            h: self.h,
            alpha: self.alpha(principal),
        }
    }

    /// Rotating about the principal point keeps a box radius-aligned.
    pub fn rotate_about(&self, angle: f64, principal: ImagePoint) -> RadiusAlignedBox {
        let c = self.center().rotate_about(&principal, angle);
        RadiusAlignedBox { cx: c.u, cy: c.v, w: self.w, h: self.h }
    }

    pub fn scaled(&self, factor: f64) -> RadiusAlignedBox {
        RadiusAlignedBox {
            cx: self.cx * factor,
            cy: self.cy * factor,
            w: self.w * factor,
            h: self.h * factor,
        }
    }

    /// Fields divided by the image side length.
    pub fn normalized(&self, side: f64) -> RadiusAlignedBox {
        self.scaled(1.0 / side)
    }

    pub fn denormalized(&self, side: f64) -> RadiusAlignedBox {
        self.scaled(side)
    }
}

/// Alias kept for the operation name used across the toolkit.
pub fn radius_aligned_rotate(b: &RadiusAlignedBox, angle: f64, principal: ImagePoint) -> RadiusAlignedBox {
    b.rotate_about(angle, principal)
}

pub fn intersect_area(a: &RotatedBox, b: &RotatedBox) -> f64 {
    if a == b {
        return a.area();
    }
    a.polygon().clip(&b.polygon()).area().max(0.0)
}

pub fn rotated_iou(a: &RotatedBox, b: &RotatedBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = intersect_area(a, b);
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

fn enclosing_for_direction(points: &[ImagePoint], ex: f64, ey: f64) -> (f64, RotatedBox) {
    let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let s = p.u * ex + p.v * ey;
        let t = -p.u * ey + p.v * ex;
        smin = smin.min(s);
        smax = smax.max(s);
        tmin = tmin.min(t);
        tmax = tmax.max(t);
    }
    let (sm, tm) = (0.5 * (smin + smax), 0.5 * (tmin + tmax));
    let h = smax - smin;
    let w = tmax - tmin;
    let bx = RotatedBox {
        cx: sm * ex - tm * ey,
        cy: sm * ey + tm * ex,
        w,
        h,
        alpha: ey.atan2(ex),
    };
    (w * h, bx)
}

fn corner_cloud(a: &RotatedBox, b: &RotatedBox) -> Vec<ImagePoint> {
    a.corners().into_iter().chain(b.corners()).collect()
}

/// Minimum-area oriented rectangle containing both boxes.
///
/// The optimum has a side collinear with an edge of the convex hull of the
/// eight corners, so enumerating hull edges is exact.
pub fn min_enclosing_box(a: &RotatedBox, b: &RotatedBox) -> RotatedBox {
    let hull = ConvexPolygon::hull(&corner_cloud(a, b));
    let v = hull.vertices();
    let n = v.len();
    let mut best: Option<(f64, RotatedBox)> = None;
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        let len = (q.u - p.u).hypot(q.v - p.v);
        if len == 0.0 {
            continue;
        }
        let cand = enclosing_for_direction(v, (q.u - p.u) / len, (q.v - p.v) / len);
        if best.as_ref().is_none_or(|(area, _)| cand.0 < *area) {
            best = Some(cand);
        }
    }
    best.map(|(_, bx)| bx).unwrap_or(*a)
}

/// Grid search over orientations in `[0°, 180°)` with the given step.
pub fn min_enclosing_box_brute_force(a: &RotatedBox, b: &RotatedBox, step_degrees: f64) -> RotatedBox {
    let pts = corner_cloud(a, b);
    let steps = (180.0 / step_degrees).round().max(1.0) as usize;
    (0..steps)
        .map(|i| {
            let ang = (i as f64 * step_degrees).to_radians();
            enclosing_for_direction(&pts, ang.cos(), ang.sin())
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, bx)| bx)
        .unwrap_or(*a)
}

/// Generalized IoU with the minimum enclosing oriented rectangle as hull.
pub fn rotated_giou(a: &RotatedBox, b: &RotatedBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = intersect_area(a, b);
    let union = a.area() + b.area() - inter;
    let iou = (inter / union).clamp(0.0, 1.0);
    let enclosing = min_enclosing_box(a, b).area().max(union);
    iou - (enclosing - union) / enclosing
}

/// Midpoint of the box side nearest the principal point: the center moved
/// h/2 towards the principal point along the radial direction.
pub fn anchor_point(b: &RadiusAlignedBox, principal: ImagePoint) -> Result<ImagePoint, GeometryError> {
    let du = b.cx - principal.u;
    let dv = b.cy - principal.v;
    if du == 0.0 && dv == 0.0 {
        return Err(GeometryError::DegenerateRadial);
    }
    let phi = dv.atan2(du);
    let (s, c) = phi.sin_cos();
    Ok(ImagePoint::new(b.cx - 0.5 * b.h * c, b.cy - 0.5 * b.h * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit(cx: f64, cy: f64) -> RotatedBox {
        RotatedBox::new(cx, cy, 1.0, 1.0, FRAC_PI_2).unwrap()
    }

    #[test]
    fn rejects_degenerate() {
        assert!(RotatedBox::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(RotatedBox::new(0.0, 0.0, 1.0, 1e-7, 0.0).is_err());
        assert!(RadiusAlignedBox::new(0.0, f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn corner_order_is_ccw_from_local_origin() {
        let b = RotatedBox::new(10.0, 20.0, 4.0, 2.0, 0.0).unwrap();
        let c = b.corners();
        // h-axis along +u, w-axis along −v
        assert_eq!(c[0], ImagePoint::new(9.0, 22.0));
        assert_eq!(c[1], ImagePoint::new(9.0, 18.0));
        assert_eq!(c[2], ImagePoint::new(11.0, 18.0));
        assert_eq!(c[3], ImagePoint::new(11.0, 22.0));
        assert!((b.polygon().area() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn rotate_box_cases() {
        let b = RotatedBox::new(100.0, 0.0, 3.0, 5.0, 0.0).unwrap();
        let o = ImagePoint::new(0.0, 0.0);
        assert_eq!(rotate_box(&b, 0.0, o), b);
        let full = rotate_box(&b, TAU, o);
        assert!((full.cx - b.cx).abs() < 1e-9 && (full.cy - b.cy).abs() < 1e-9);
        assert!(full.alpha.abs() < 1e-9);
        let q = rotate_box(&b, FRAC_PI_2, o);
        assert!(q.cx.abs() < 1e-12 && (q.cy - 100.0).abs() < 1e-12);
        assert_eq!(q.alpha, FRAC_PI_2);
        assert_eq!((q.w, q.h), (3.0, 5.0));
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn radius_aligned_rotation_by_pi() {
        let p = ImagePoint::new(0.0, 0.0);
        let b = RadiusAlignedBox::new(50.0, 0.0, 10.0, 20.0).unwrap();
        let r = b.rotate_about(PI, p);
        assert!((r.cx + 50.0).abs() < 1e-12 && r.cy.abs() < 1e-12);
        assert_eq!((r.w, r.h), (10.0, 20.0));
        assert!((wrap_angle(r.alpha(p) - b.alpha(p) - PI)).abs() < 1e-12);
    }

    #[test]
    fn overlap_cases() {
        let a = unit(0.0, 0.0);
        assert!((intersect_area(&a, &a) - 1.0).abs() < 1e-12);
        assert!((intersect_area(&a, &unit(0.5, 0.0)) - 0.5).abs() < 1e-12);
        assert_eq!(rotated_iou(&a, &a), 1.0);
        assert_eq!(rotated_iou(&a, &unit(5.0, 0.0)), 0.0);
        assert!((rotated_iou(&a, &unit(0.5, 0.0)) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn enclosing_cases() {
        let a = unit(0.0, 0.0);
        assert!((min_enclosing_box(&a, &a).area() - 1.0).abs() < 1e-9);
        assert!((min_enclosing_box(&a, &unit(2.0, 0.0)).area() - 3.0).abs() < 1e-12);
        let tilted = RotatedBox::new(3.0, 1.0, 2.0, 5.0, 0.7).unwrap();
        let e = min_enclosing_box(&tilted, &tilted);
        assert!((e.area() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn giou_cases() {
        let a = unit(0.0, 0.0);
        assert!((rotated_giou(&a, &a) - 1.0).abs() < 1e-12);
        assert!((rotated_giou(&a, &unit(10.0, 0.0)) + 9.0 / 11.0).abs() < 1e-12);
        // containment: GIoU = IoU
        let big = RotatedBox::new(0.0, 0.0, 4.0, 6.0, 0.3).unwrap();
        let small = RotatedBox::new(0.2, -0.1, 1.0, 1.5, 1.1).unwrap();
        assert!((rotated_giou(&big, &small) - rotated_iou(&big, &small)).abs() < 1e-12);
    }

    #[test]
    fn anchor_cases() {
        let o = ImagePoint::new(0.0, 0.0);
        let a = anchor_point(&RadiusAlignedBox::new(100.0, 0.0, 10.0, 40.0).unwrap(), o).unwrap();
        assert_eq!(a, ImagePoint::new(80.0, 0.0));
        let a = anchor_point(&RadiusAlignedBox::new(0.0, 60.0, 10.0, 20.0).unwrap(), o).unwrap();
        assert!(a.u.abs() < 1e-12 && (a.v - 50.0).abs() < 1e-12);
        let err = anchor_point(&RadiusAlignedBox::new(0.0, 0.0, 1.0, 1.0).unwrap(), o);
        assert_eq!(err, Err(GeometryError::DegenerateRadial));
    }
}
