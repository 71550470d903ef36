use crate::camera::ImagePoint;

fn cross(o: ImagePoint, a: ImagePoint, b: ImagePoint) -> f64 {
    (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u)
}

/// Convex polygon with counter-clockwise vertices (positive shoelace area).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexPolygon {
    vertices: Vec<ImagePoint>,
}

impl ConvexPolygon {
    /// Wrap vertices already known to be convex and counter-clockwise.
    pub(crate) fn from_ccw(vertices: Vec<ImagePoint>) -> Self {
        Self { vertices }
    }

    /// Convex hull of an arbitrary point set (Andrew's monotone chain).
    /// Collinear points are dropped.
    pub fn hull(points: &[ImagePoint]) -> Self {
        let mut pts: Vec<ImagePoint> = points.to_vec();
        pts.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.v.total_cmp(&b.v)));
        pts.dedup();
        if pts.len() < 3 {
            return Self { vertices: pts };
        }
        let mut hull: Vec<ImagePoint> = Vec::with_capacity(2 * pts.len());
        for &p in &pts {
            while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        let lower_len = hull.len() + 1;
        for &p in pts.iter().rev().skip(1) {
            while hull.len() >= lower_len
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
        Self { vertices: hull }
    }

    pub fn vertices(&self) -> &[ImagePoint] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let twice: f64 = (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.u * b.v - a.v * b.u
            })
            .sum();
        0.5 * twice
    }

    pub fn contains(&self, p: ImagePoint) -> bool {
        let n = self.vertices.len();
        n >= 3 && (0..n).all(|i| cross(self.vertices[i], self.vertices[(i + 1) % n], p) >= 0.0)
    }

    /// Sutherland–Hodgman clip of `self` against the convex `clip` polygon.
    ///
    /// Crossing points are interpolated from signed edge distances, so nearly
    /// coincident edges never produce a far-away intersection.
    pub fn clip(&self, clip: &ConvexPolygon) -> ConvexPolygon {
        let mut output = self.vertices.clone();
        let m = clip.vertices.len();
        if m < 3 {
            return ConvexPolygon::default();
        }
        for i in 0..m {
            if output.is_empty() {
                break;
            }
            let a = clip.vertices[i];
            let b = clip.vertices[(i + 1) % m];
            let input = std::mem::take(&mut output);
            let n = input.len();
            for j in 0..n {
                let p = input[j];
                let q = input[(j + 1) % n];
                let sp = cross(a, b, p);
                let sq = cross(a, b, q);
                if sp >= 0.0 {
                    output.push(p);
                    if sq < 0.0 {
                        output.push(lerp(p, q, sp / (sp - sq)));
                    }
                } else if sq >= 0.0 {
                    output.push(lerp(p, q, sp / (sp - sq)));
                }
            }
        }
        ConvexPolygon { vertices: output }
    }
}

fn lerp(p: ImagePoint, q: ImagePoint, t: f64) -> ImagePoint {
    ImagePoint::new(p.u + t * (q.u - p.u), p.v + t * (q.v - p.v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: f64, y: f64, s: f64) -> ConvexPolygon {
        ConvexPolygon::from_ccw(vec![
            ImagePoint::new(x, y),
            ImagePoint::new(x + s, y),
            ImagePoint::new(x + s, y + s),
            ImagePoint::new(x, y + s),
        ])
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let pts = [
            ImagePoint::new(0.0, 0.0),
            ImagePoint::new(1.0, 0.0),
            ImagePoint::new(2.0, 0.0),
            ImagePoint::new(2.0, 2.0),
            ImagePoint::new(1.0, 1.0),
            ImagePoint::new(0.0, 2.0),
        ];
        let h = ConvexPolygon::hull(&pts);
        assert_eq!(h.vertices().len(), 4);
        assert_eq!(h.area(), 4.0);
    }

    #[test]
    fn clip_overlap_and_disjoint() {
        let a = square(0.0, 0.0, 2.0);
        assert_eq!(a.clip(&square(1.0, 1.0, 2.0)).area(), 1.0);
        assert!(a.clip(&square(5.0, 5.0, 1.0)).area() == 0.0);
        assert_eq!(a.clip(&a).area(), 4.0);
    }
}
