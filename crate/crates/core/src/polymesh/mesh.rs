use std::collections::HashMap;

use super::point::Point2;
use super::polygon::Polygon;
use crate::error::{Error, Result};

/// Conforming polygonal mesh with one scalar unknown per vertex.
#[derive(Clone, Debug)]
pub struct PolyMesh {
    points: Vec<Point2>,
    cells: Vec<Vec<usize>>,
    cell_region: Vec<i32>,
    boundary_vertex: Vec<bool>,
    polygons: Vec<Polygon>,
    h: f64,
}

impl PolyMesh {
    /// Validates topology and cell geometry. Cells must be counterclockwise;
    /// see [`super::io`] for the reversal policy applied on ingestion.
    pub fn new(points: Vec<Point2>, cells: Vec<Vec<usize>>, cell_region: Vec<i32>) -> Result<Self> {
        if cell_region.len() != cells.len() {
            return Err(Error::Dimension(format!(
                "{} region tags for {} cells",
                cell_region.len(),
                cells.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Topology {
                cell: usize::MAX,
                msg: format!("point {i} is not finite"),
            });
        }
        let mut polygons = Vec::with_capacity(cells.len());
        // directed edge -> owning cell
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(Error::Topology {
                    cell: c,
                    msg: format!("{} vertices", cell.len()),
                });
            }
            for (k, &v) in cell.iter().enumerate() {
                if v >= points.len() {
                    return Err(Error::Topology {
                        cell: c,
                        msg: format!("vertex index {v} out of range"),
                    });
                }
                if cell[..k].contains(&v) {
                    return Err(Error::Topology {
                        cell: c,
                        msg: format!("repeated vertex {v}"),
                    });
                }
            }
            let n = cell.len();
            for k in 0..n {
                let e = (cell[k], cell[(k + 1) % n]);
                if let Some(other) = edges.insert(e, c) {
                    return Err(Error::Topology {
                        cell: c,
                        msg: format!(
                            "edge ({}, {}) used twice with the same orientation (also in cell {other})",
                            e.0, e.1
                        ),
                    });
                }
            }
            let poly = Polygon::new(cell.iter().map(|&v| points[v]).collect()).map_err(|e| match e {
                Error::NotStarShaped { .. } => Error::NotStarShaped { cell: Some(c) },
                Error::InvalidPolygon(msg) => Error::Topology { cell: c, msg },
                e => e,
            })?;
            polygons.push(poly);
        }
        let mut boundary_vertex = vec![false; points.len()];
        let mut used = vec![false; points.len()];
        for (&(a, b), _) in edges.iter() {
            used[a] = true;
            if !edges.contains_key(&(b, a)) {
                boundary_vertex[a] = true;
                boundary_vertex[b] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::Topology {
                cell: usize::MAX,
                msg: format!("point {i} is not used by any cell"),
            });
        }
        let h = polygons.iter().map(Polygon::diameter).fold(0.0, f64::max);
        Ok(PolyMesh {
            points,
            cells,
            cell_region,
            boundary_vertex,
            polygons,
            h,
        })
    }

    #[inline]
    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    #[inline]
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    #[inline]
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    #[inline]
    pub fn cell_region(&self) -> &[i32] {
        &self.cell_region
    }

    #[inline]
    pub fn region(&self, c: usize) -> i32 {
        self.cell_region[c]
    }

    #[inline]
    pub fn polygon(&self, c: usize) -> &Polygon {
        &self.polygons[c]
    }

    #[inline]
    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    #[inline]
    pub fn boundary_vertex(&self) -> &[bool] {
        &self.boundary_vertex
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Maximum cell diameter.
    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn total_area(&self) -> f64 {
        self.polygons.iter().map(Polygon::area).sum()
    }

    /// Area enclosed by the boundary edges (shoelace over boundary edges only).
    pub fn boundary_enclosed_area(&self) -> f64 {
        let interior = self.directed_edges();
        let mut a2 = 0.0;
        for &(a, b) in interior.keys() {
            if !interior.contains_key(&(b, a)) {
                a2 += self.points[a].cross(self.points[b]);
            }
        }
        0.5 * a2
    }

    /// Vertex counts that occur in the mesh, ascending.
    pub fn vertex_counts(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = self.cells.iter().map(Vec::len).collect();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    /// Number of cells sharing each undirected edge.
    pub fn edge_incidence(&self) -> HashMap<(usize, usize), usize> {
        let mut m = HashMap::new();
        for cell in &self.cells {
            let n = cell.len();
            for k in 0..n {
                let (a, b) = (cell[k], cell[(k + 1) % n]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }

    fn directed_edges(&self) -> HashMap<(usize, usize), usize> {
        let mut m = HashMap::new();
        for (c, cell) in self.cells.iter().enumerate() {
            let n = cell.len();
            for k in 0..n {
                m.insert((cell[k], cell[(k + 1) % n]), c);
            }
        }
        m
    }
}
