//! Piecewise-affine map from a star-shaped polygon to the reference regular
//! N-gon, one linear map per fan sector, and the affine-decomposition
//! coefficients of the pulled-back diffusion form.

use std::f64::consts::PI;

use nalgebra::Matrix2;

use super::point::Point2;
use super::polygon::{normalize_polygon, star_shape_check, Polygon, Similarity};
use crate::error::{Error, Result};

/// Fixed matrix basis S^1..S^4 of 2x2 real matrices.
pub const MATRIX_BASIS: [[[f64; 2]; 2]; 4] = [
    [[1.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 1.0]],
    [[0.0, 1.0], [1.0, 0.0]],
    [[0.0, 1.0], [-1.0, 0.0]],
];

/// Vertex `k` of the reference regular N-gon (circumradius one, centered at
/// the origin, first vertex on the positive x axis).
pub fn reference_vertex(n: usize, k: usize) -> Point2 {
    let t = 2.0 * PI * (k % n) as f64 / n as f64;
    Point2::new(t.cos(), t.sin())
}

#[derive(Clone, Debug)]
pub struct ElementMap {
    n: usize,
    centroid: Point2,
    similarity: Similarity,
    b: Vec<Matrix2<f64>>,
    b_inv: Vec<Matrix2<f64>>,
    gamma: Vec<f64>,
    theta: Vec<[f64; 4]>,
}

impl ElementMap {
    /// Sector `i` is the fan triangle `(x_K, v_i, v_{i+1})`; its map is
    /// `F(x) = B_i (x - x_K)` with `F(v_i) = v̂_i`.
    pub fn new(poly: &Polygon, kappa: &Matrix2<f64>) -> Result<Self> {
        if !star_shape_check(poly) {
            return Err(Error::NotStarShaped { cell: None });
        }
        let n = poly.n_vertices();
        let xk = poly.centroid();
        let (_, similarity) = normalize_polygon(poly)?;
        let mut b = Vec::with_capacity(n);
        let mut b_inv = Vec::with_capacity(n);
        let mut gamma = Vec::with_capacity(n);
        let mut theta = Vec::with_capacity(n);
        for i in 0..n {
            let p = poly.vertex(i) - xk;
            let q = poly.vertex(i + 1) - xk;
            let phys = Matrix2::new(p.x, q.x, p.y, q.y);
            let (rp, rq) = (reference_vertex(n, i), reference_vertex(n, i + 1));
            let refm = Matrix2::new(rp.x, rq.x, rp.y, rq.y);
            let det = phys.determinant();
            if det <= 0.0 || !det.is_finite() {
                return Err(Error::SingularSector { sector: i });
            }
            let phys_inv = phys.try_inverse().ok_or(Error::SingularSector { sector: i })?;
            let bi = refm * phys_inv;
            let bi_inv = phys * refm.try_inverse().ok_or(Error::SingularSector { sector: i })?;
            let g = bi_inv.determinant().abs();
            let metric = bi * kappa * bi.transpose() * g;
            theta.push([
                metric[(0, 0)],
                metric[(1, 1)],
                0.5 * (metric[(0, 1)] + metric[(1, 0)]),
                0.5 * (metric[(0, 1)] - metric[(1, 0)]),
            ]);
            b.push(bi);
            b_inv.push(bi_inv);
            gamma.push(g);
        }
        Ok(ElementMap {
            n,
            centroid: xk,
            similarity,
            b,
            b_inv,
            gamma,
            theta,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn centroid(&self) -> Point2 {
        self.centroid
    }

    /// Similarity taking the polygon to its normalized representative.
    #[inline]
    pub fn similarity(&self) -> Similarity {
        self.similarity
    }

    #[inline]
    pub fn b(&self, i: usize) -> &Matrix2<f64> {
        &self.b[i]
    }

    #[inline]
    pub fn b_inv(&self, i: usize) -> &Matrix2<f64> {
        &self.b_inv[i]
    }

    /// `|det B_i^{-1}|`, the area ratio between sector `i` and its reference.
    #[inline]
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    #[inline]
    pub fn theta(&self) -> &[[f64; 4]] {
        &self.theta
    }

    /// Reference point of physical `x` using sector `i`'s map.
    pub fn to_reference(&self, i: usize, x: Point2) -> Point2 {
        apply(&self.b[i], x - self.centroid)
    }

    /// Physical point of reference `xh` using sector `i`'s inverse map.
    pub fn to_physical(&self, i: usize, xh: Point2) -> Point2 {
        apply(&self.b_inv[i], xh) + self.centroid
    }

    /// `Σ_ν θ_i^ν S^ν`.
    pub fn reconstruct_metric(&self, i: usize) -> Matrix2<f64> {
        let mut m = Matrix2::zeros();
        for (nu, s) in MATRIX_BASIS.iter().enumerate() {
            m += Matrix2::new(s[0][0], s[0][1], s[1][0], s[1][1]) * self.theta[i][nu];
        }
        m
    }
}

pub fn build_element_map(poly: &Polygon, kappa: &Matrix2<f64>) -> Result<ElementMap> {
    ElementMap::new(poly, kappa)
}

fn apply(m: &Matrix2<f64>, p: Point2) -> Point2 {
    Point2::new(m[(0, 0)] * p.x + m[(0, 1)] * p.y, m[(1, 0)] * p.x + m[(1, 1)] * p.y)
}
