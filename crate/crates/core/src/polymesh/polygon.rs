use std::f64::consts::PI;

use super::point::{orient2d, Point2};
use crate::error::{Error, Result};

/// Minimum admissible ratio between the shortest edge and the diameter.
pub const EDGE_RATIO_MIN: f64 = 1e-3;
/// Fan triangles must have signed area above `AREA_EPS * h_E^2`.
pub const AREA_EPS: f64 = 1e-12;

/// A polygon with counterclockwise vertices and cached geometric data.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
    area: f64,
    centroid: Point2,
    diameter: f64,
    circumradius: f64,
}

impl Polygon {
    /// Builds a polygon and checks every validity condition (orientation,
    /// star-shapedness about the centroid, edge regularity).
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        let p = Self::new_unchecked(vertices)?;
        if p.area <= 0.0 {
            return Err(Error::InvalidPolygon(format!(
                "non-positive signed area {} (vertices must be counterclockwise)",
                p.area
            )));
        }
        if !star_shape_check(&p) {
            return Err(Error::NotStarShaped { cell: None });
        }
        let min_edge = p.edges().map(|(a, b)| a.dist(b)).fold(f64::INFINITY, f64::min);
        if min_edge < EDGE_RATIO_MIN * p.diameter {
            return Err(Error::InvalidPolygon(format!(
                "edge of length {min_edge:e} is shorter than {EDGE_RATIO_MIN} * h_E (h_E = {})",
                p.diameter
            )));
        }
        Ok(p)
    }

    /// Computes the geometric data without the star-shape and regularity checks.
    /// Only requires at least three finite vertices with nonzero area.
    pub fn new_unchecked(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "{} vertices, at least 3 required",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        let n = vertices.len();
        let mut a2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        // shift by the first vertex to limit cancellation
        let o = vertices[0];
        for i in 0..n {
            let p = vertices[i] - o;
            let q = vertices[(i + 1) % n] - o;
            let w = p.cross(q);
            a2 += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        if a2 == 0.0 {
            return Err(Error::InvalidPolygon("zero area".into()));
        }
        let area = 0.5 * a2;
        let centroid = Point2::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2));
        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                diameter = diameter.max(vertices[i].dist(vertices[j]));
            }
        }
        let circumradius = vertices.iter().map(|v| v.dist(centroid)).fold(0.0, f64::max);
        Ok(Polygon {
            vertices,
            area,
            centroid,
            diameter,
            circumradius,
        })
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    #[inline]
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i % self.vertices.len()]
    }

    /// Signed area (positive for counterclockwise polygons).
    #[inline]
    pub fn area(&self) -> f64 {
        self.area
    }

    #[inline]
    pub fn centroid(&self) -> Point2 {
        self.centroid
    }

    /// Largest distance between two vertices, h_E.
    #[inline]
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Largest distance from the centroid to a vertex.
    #[inline]
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    /// Edges `(v_i, v_{i+1})` in counterclockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Fan triangles `(x_K, v_i, v_{i+1})`.
    pub fn fan_triangles(&self) -> impl Iterator<Item = [Point2; 3]> + '_ {
        let c = self.centroid;
        self.edges().map(move |(a, b)| [c, a, b])
    }

    pub fn translated(&self, t: Point2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|&v| v + t).collect(),
            area: self.area,
            centroid: self.centroid + t,
            diameter: self.diameter,
            circumradius: self.circumradius,
        }
    }

    /// Uniform scaling about the origin.
    pub fn scaled(&self, s: f64) -> Polygon {
        assert!(s > 0.0);
        Polygon {
            vertices: self.vertices.iter().map(|&v| v * s).collect(),
            area: self.area * s * s,
            centroid: self.centroid * s,
            diameter: self.diameter * s,
            circumradius: self.circumradius * s,
        }
    }

    /// Same polygon with the vertex list cyclically shifted by `k`.
    pub fn relabeled(&self, k: usize) -> Polygon {
        let n = self.vertices.len();
        let mut p = self.clone();
        p.vertices = (0..n).map(|i| self.vertices[(i + k) % n]).collect();
        p
    }
}

/// True when every fan triangle about the centroid has signed area above
/// `AREA_EPS * h_E^2` and the fan winds exactly once.
pub fn star_shape_check(poly: &Polygon) -> bool {
    let h2 = poly.diameter() * poly.diameter();
    let c = poly.centroid();
    let mut winding = 0.0;
    for [x, a, b] in poly.fan_triangles() {
        if 0.5 * orient2d(x, a, b) <= AREA_EPS * h2 {
            return false;
        }
        winding += (a - c).cross(b - c).atan2((a - c).dot(b - c));
    }
    (winding - 2.0 * PI).abs() < 1e-6
}

/// Similarity `x -> (x - translation) / scale` taking a polygon into the
/// normalized parameter space (centroid at the origin, circumradius one).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub translation: Point2,
    pub scale: f64,
}

impl Similarity {
    pub const IDENTITY: Similarity = Similarity {
        translation: Point2::ORIGIN,
        scale: 1.0,
    };

    #[inline]
    pub fn apply(&self, p: Point2) -> Point2 {
        (p - self.translation) * (1.0 / self.scale)
    }

    #[inline]
    pub fn apply_inverse(&self, p: Point2) -> Point2 {
        p * self.scale + self.translation
    }
}

pub fn normalize_polygon(poly: &Polygon) -> Result<(Polygon, Similarity)> {
    if poly.area() <= 0.0 || poly.circumradius() <= 0.0 {
        return Err(Error::InvalidPolygon("degenerate polygon cannot be normalized".into()));
    }
    let t = Similarity {
        translation: poly.centroid(),
        scale: poly.circumradius(),
    };
    let vs = poly.vertices().iter().map(|&v| t.apply(v)).collect();
    let mut out = Polygon::new_unchecked(vs)?;
    // exact by construction; suppress roundoff drift
    out.centroid = Point2::ORIGIN;
    out.circumradius = 1.0;
    Ok((out, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polygon {
        Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn unit_square_data() {
        let s = square();
        assert!((s.area() - 1.0).abs() < 1e-15);
        assert!((s.diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert!(s.centroid().dist(Point2::new(0.5, 0.5)) < 1e-15);
        assert!(star_shape_check(&s));
    }

    #[test]
    fn clockwise_rejected() {
        let cw = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ];
        assert!(matches!(Polygon::new(cw), Err(Error::InvalidPolygon(_))));
    }

    #[test]
    fn l_hexagon_with_centroid_outside_kernel() {
        // thin L: the centroid lies in the corner region but not in the kernel
        let l = Polygon::new_unchecked(vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 0.2),
            Point2::new(0.2, 0.2),
            Point2::new(0.2, 4.0),
            Point2::new(0.0, 4.0),
        ])
        .unwrap();
        // signed-area oracle: some fan triangle is inverted
        let c = l.centroid();
        let inverted = l.fan_triangles().any(|[_, a, b]| orient2d(c, a, b) <= 0.0);
        assert!(inverted);
        assert!(!star_shape_check(&l));
        assert!(matches!(
            Polygon::new(l.vertices().to_vec()),
            Err(Error::NotStarShaped { .. })
        ));
    }

    #[test]
    fn regular_polygons_are_star_shaped() {
        for n in 3..12 {
            let vs = (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    Point2::new(t.cos(), t.sin())
                })
                .collect();
            assert!(star_shape_check(&Polygon::new(vs).unwrap()));
        }
    }

    #[test]
    fn normalize_square() {
        let (n, t) = normalize_polygon(&square()).unwrap();
        for v in n.vertices() {
            assert!((v.norm() - 1.0).abs() < 1e-15);
        }
        assert!((t.scale - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        let (_, t2) = normalize_polygon(&n).unwrap();
        assert!(t2.translation.norm() < 1e-15);
        assert!((t2.scale - 1.0).abs() < 1e-15);
    }

    #[test]
    fn short_edge_rejected() {
        let vs = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0 - 1e-5, 1.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(matches!(Polygon::new(vs), Err(Error::InvalidPolygon(_))));
    }
}
