use crate::error::{Error, Result};
use crate::polymesh::{reference_vertex, Point2, Polygon};

/// The regular N-gon with circumradius one and `v̂_0` on the positive x axis.
pub fn build_reference_ngon(n: usize) -> Result<Polygon> {
    if n < 3 {
        return Err(Error::Config(format!("reference polygon needs N >= 3, got {n}")));
    }
    Polygon::new((0..n).map(|k| reference_vertex(n, k)).collect())
}

/// Sector-conforming uniform refinement of the fan of the reference N-gon.
///
/// Sector `i` is the triangle `(0, v̂_i, v̂_{i+1})`; its nodes are the lattice
/// points `(a v̂_i + b v̂_{i+1}) / m` with `a + b <= m`, `m = 2^level`.
#[derive(Clone, Debug)]
pub struct RefTriangulation {
    n: usize,
    level: u32,
    m: usize,
    nodes: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    sector_of_triangle: Vec<usize>,
    boundary: Vec<bool>,
    /// node -> interior dof, `usize::MAX` on the boundary
    interior_index: Vec<usize>,
    interior_nodes: Vec<usize>,
}

impl RefTriangulation {
    pub fn new(n: usize, level: u32) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!("reference polygon needs N >= 3, got {n}")));
        }
        if level > 10 {
            return Err(Error::Config(format!("refinement level {level} is too large")));
        }
        let m = 1usize << level;
        let n_nodes = 1 + n * m + n * m * (m - 1) / 2;
        let mut nodes = vec![Point2::ORIGIN; n_nodes];
        let mut boundary = vec![false; n_nodes];
        let mut triangles = Vec::with_capacity(n * m * m);
        let mut sector_of_triangle = Vec::with_capacity(n * m * m);
        let tri = Self::skeleton(n, m);
        for s in 0..n {
            let (p, q) = (reference_vertex(n, s), reference_vertex(n, s + 1));
            for a in 0..=m {
                for b in 0..=m - a {
                    let id = tri.node_id(s, a, b);
                    nodes[id] = (p * a as f64 + q * b as f64) * (1.0 / m as f64);
                    if a + b == m {
                        boundary[id] = true;
                    }
                }
            }
            for a in 0..m {
                for b in 0..m - a {
                    triangles.push([tri.node_id(s, a, b), tri.node_id(s, a + 1, b), tri.node_id(s, a, b + 1)]);
                    sector_of_triangle.push(s);
                    if a + b + 2 <= m {
                        triangles.push([
                            tri.node_id(s, a + 1, b),
                            tri.node_id(s, a + 1, b + 1),
                            tri.node_id(s, a, b + 1),
                        ]);
                        sector_of_triangle.push(s);
                    }
                }
            }
        }
        // vertices are exact copies of the reference vertices
        for k in 0..n {
            nodes[tri.node_id(k, m, 0)] = reference_vertex(n, k);
        }
        let mut interior_index = vec![usize::MAX; n_nodes];
        let mut interior_nodes = Vec::new();
        for (i, &b) in boundary.iter().enumerate() {
            if !b {
                interior_index[i] = interior_nodes.len();
                interior_nodes.push(i);
            }
        }
        Ok(RefTriangulation {
            n,
            level,
            m,
            nodes,
            triangles,
            sector_of_triangle,
            boundary,
            interior_index,
            interior_nodes,
        })
    }

    fn skeleton(n: usize, m: usize) -> RefTriangulation {
        RefTriangulation {
            n,
            level: 0,
            m,
            nodes: Vec::new(),
            triangles: Vec::new(),
            sector_of_triangle: Vec::new(),
            boundary: Vec::new(),
            interior_index: Vec::new(),
            interior_nodes: Vec::new(),
        }
    }

    /// Global id of lattice point `(a, b)` of sector `s`.
    ///
    /// Layout: origin, then rays `k` (points `t v̂_k / m`, `t = 1..m`), then
    /// boundary-edge interiors, then sector interiors.
    pub fn node_id(&self, s: usize, a: usize, b: usize) -> usize {
        let (n, m) = (self.n, self.m);
        debug_assert!(a + b <= m);
        let s = s % n;
        if a == 0 && b == 0 {
            return 0;
        }
        let ray = |k: usize, t: usize| 1 + (k % n) * m + (t - 1);
        if b == 0 {
            return ray(s, a);
        }
        if a == 0 {
            return ray(s + 1, b);
        }
        let edges = 1 + n * m;
        if a + b == m {
            return edges + s * (m - 1) + (b - 1);
        }
        let interiors = edges + n * (m - 1);
        let per_sector = (m - 1) * (m - 2) / 2;
        // row-major over a = 1..m-2, b = 1..m-1-a
        let before: usize = (1..a).map(|r| m - 1 - r).sum();
        interiors + s * per_sector + before + (b - 1)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Subdivisions per sector edge, `2^level`.
    #[inline]
    pub fn subdivisions(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn sector_of_triangle(&self) -> &[usize] {
        &self.sector_of_triangle
    }

    #[inline]
    pub fn boundary_nodes(&self) -> &[bool] {
        &self.boundary
    }

    #[inline]
    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    #[inline]
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Interior dof index of a node, `None` on the boundary.
    #[inline]
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        let i = self.interior_index[node];
        (i != usize::MAX).then_some(i)
    }

    /// Node id of the reference vertex `v̂_k`.
    #[inline]
    pub fn vertex_node(&self, k: usize) -> usize {
        self.node_id(k, self.m, 0)
    }

    /// Triangles of sector `s` (contiguous block).
    pub fn sector_triangles(&self, s: usize) -> std::ops::Range<usize> {
        let per = self.m * self.m;
        s * per..(s + 1) * per
    }

    /// Nodes belonging to sector `s` (closed), sorted.
    pub fn sector_nodes(&self, s: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..=self.m)
            .flat_map(|a| (0..=self.m - a).map(move |b| (a, b)))
            .map(|(a, b)| self.node_id(s, a, b))
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Nodal vector of the fan hat `η̂_k`: `k = 0` is the center, `k = 1..=N`
    /// the vertex `v̂_{k-1}`. Each is linear on every sector.
    pub fn fan_hat(&self, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_nodes()];
        let m = self.m;
        for s in 0..self.n {
            for a in 0..=m {
                for b in 0..=m - a {
                    let w = if k == 0 {
                        (m - a - b) as f64 / m as f64
                    } else if (k - 1) == s {
                        a as f64 / m as f64
                    } else if (k - 1) == (s + 1) % self.n {
                        b as f64 / m as f64
                    } else {
                        0.0
                    };
                    v[self.node_id(s, a, b)] = w;
                }
            }
        }
        v
    }

    /// Boundary datum `ĝ_i`: piecewise linear on `∂Ê` with `ĝ_i(v̂_k) = δ_ik`,
    /// given at every node (interior entries zero).
    pub fn boundary_datum(&self, i: usize) -> Vec<f64> {
        let mut g = self.fan_hat(i + 1);
        for (v, &b) in g.iter_mut().zip(&self.boundary) {
            if !b {
                *v = 0.0;
            }
        }
        g
    }
}
