//! Structured mesh families: dyadic squares and truncated-square octagons.

use std::collections::HashMap;

use super::mesh::PolyMesh;
use super::point::Point2;
use crate::error::{Error, Result};

/// Region tag of the high-diffusivity quadrants in checkerboard meshes.
pub const DELTA_REGION: i32 = 1;

/// `n x n` squares on (0,1)^2, each carrying its four edge midpoints as
/// extra vertices (8 vertices per cell).
pub fn generate_dyadic_mesh(n: usize) -> Result<PolyMesh> {
    dyadic_grid(Point2::ORIGIN, 1.0, n, |_, _| Some(0))
}

/// Dyadic mesh of the L-shaped domain (-1,1)^2 \ (0,1)x(-1,0) with `n`
/// cells per side of the bounding square (`n` even).
pub fn generate_dyadic_lshape(n: usize) -> Result<PolyMesh> {
    require_even(n)?;
    let half = n / 2;
    dyadic_grid(Point2::new(-1.0, -1.0), 2.0, n, |i, j| {
        if i >= half && j < half {
            None
        } else {
            Some(0)
        }
    })
}

/// Dyadic mesh of (-1,1)^2 with the first and third quadrants tagged
/// [`DELTA_REGION`] and the others tagged 0 (`n` even).
pub fn generate_dyadic_checkerboard(n: usize) -> Result<PolyMesh> {
    require_even(n)?;
    let half = n / 2;
    dyadic_grid(Point2::new(-1.0, -1.0), 2.0, n, |i, j| {
        Some(if (i >= half) == (j >= half) { DELTA_REGION } else { 0 })
    })
}

fn require_even(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Config(format!("n must be even and >= 2, got {n}")));
    }
    Ok(())
}

fn dyadic_grid(origin: Point2, side: f64, n: usize, keep: impl Fn(usize, usize) -> Option<i32>) -> Result<PolyMesh> {
    if n == 0 {
        return Err(Error::Config("dyadic mesh needs n >= 1".into()));
    }
    let m = 2 * n + 1;
    let step = side / (2 * n) as f64;
    let mut kept = Vec::new();
    let mut used = vec![false; m * m];
    for j in 0..n {
        for i in 0..n {
            if let Some(r) = keep(i, j) {
                for (a, b) in octagon_offsets() {
                    used[(2 * j + b) * m + 2 * i + a] = true;
                }
                kept.push((i, j, r));
            }
        }
    }
    let mut index = vec![usize::MAX; m * m];
    let mut points = Vec::new();
    for b in 0..m {
        for a in 0..m {
            if used[b * m + a] {
                index[b * m + a] = points.len();
                // integer lattice keeps shared nodes bit-identical
                let x = if a == m - 1 {
                    origin.x + side
                } else {
                    origin.x + a as f64 * step
                };
                let y = if b == m - 1 {
                    origin.y + side
                } else {
                    origin.y + b as f64 * step
                };
                points.push(Point2::new(x, y));
            }
        }
    }
    let mut cells = Vec::with_capacity(kept.len());
    let mut regions = Vec::with_capacity(kept.len());
    for (i, j, r) in kept {
        cells.push(
            octagon_offsets()
                .map(|(a, b)| index[(2 * j + b) * m + 2 * i + a])
                .collect(),
        );
        regions.push(r);
    }
    PolyMesh::new(points, cells, regions)
}

/// Lattice offsets of a dyadic cell's vertices, counterclockwise from the
/// bottom-left corner.
fn octagon_offsets() -> impl Iterator<Item = (usize, usize)> {
    [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)].into_iter()
}

/// Truncated-square tiling of (0,1)^2: `n x n` regular octagons, regular
/// squares at interior junctions, right isosceles triangles along the
/// boundary and at the four corners.
pub fn generate_octagon_mesh(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(Error::Config("octagon mesh needs n >= 1".into()));
    }
    let pitch = 1.0 / n as f64;
    let side = pitch / (1.0 + std::f64::consts::SQRT_2);
    let c = side / std::f64::consts::SQRT_2;
    let mut pool = ExactPool::new(n);
    let mut cells = Vec::new();
    let coord = |k: usize| if k == n { 1.0 } else { k as f64 * pitch };

    for b in 0..n {
        for a in 0..n {
            let (x0, x1, y0, y1) = (coord(a), coord(a + 1), coord(b), coord(b + 1));
            let key = |ka: usize, da: i8, kb: usize, db: i8| ((ka, da), (kb, db));
            let verts = [
                (key(a, 1, b, 0), Point2::new(x0 + c, y0)),
                (key(a + 1, -1, b, 0), Point2::new(x1 - c, y0)),
                (key(a + 1, 0, b, 1), Point2::new(x1, y0 + c)),
                (key(a + 1, 0, b + 1, -1), Point2::new(x1, y1 - c)),
                (key(a + 1, -1, b + 1, 0), Point2::new(x1 - c, y1)),
                (key(a, 1, b + 1, 0), Point2::new(x0 + c, y1)),
                (key(a, 0, b + 1, -1), Point2::new(x0, y1 - c)),
                (key(a, 0, b, 1), Point2::new(x0, y0 + c)),
            ];
            cells.push(verts.iter().map(|&(k, p)| pool.get(k, p)).collect::<Vec<_>>());
        }
    }
    // junction fillers at lattice points
    for kb in 0..=n {
        for ka in 0..=n {
            let (x, y) = (coord(ka), coord(kb));
            let mut ring: Vec<((usize, i8), (usize, i8), Point2)> = Vec::new();
            if kb > 0 {
                ring.push(((ka, 0), (kb, -1), Point2::new(x, y - c)));
            }
            if ka < n {
                ring.push(((ka, 1), (kb, 0), Point2::new(x + c, y)));
            }
            if kb < n {
                ring.push(((ka, 0), (kb, 1), Point2::new(x, y + c)));
            }
            if ka > 0 {
                ring.push(((ka, -1), (kb, 0), Point2::new(x - c, y)));
            }
            if (ka == 0 || ka == n) && (kb == 0 || kb == n) {
                ring.push(((ka, 0), (kb, 0), Point2::new(x, y)));
            }
            let mut cell: Vec<usize> = ring.iter().map(|&(ka, kb, p)| pool.get((ka, kb), p)).collect();
            let pts: Vec<Point2> = cell.iter().map(|&i| pool.points[i]).collect();
            sort_ccw(&mut cell, &pts);
            cells.push(cell);
        }
    }
    let regions = vec![0; cells.len()];
    PolyMesh::new(pool.points, cells, regions)
}

fn sort_ccw(cell: &mut [usize], pts: &[Point2]) {
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / pts.len() as f64;
    let mut tagged: Vec<(f64, usize)> = cell
        .iter()
        .zip(pts)
        .map(|(&i, p)| ((p.y - cy).atan2(p.x - cx), i))
        .collect();
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (slot, (_, i)) in cell.iter_mut().zip(tagged) {
        *slot = i;
    }
}

/// Point pool keyed by symbolic lattice position (lattice index, offset sign).
struct ExactPool {
    map: HashMap<((usize, i8), (usize, i8)), usize>,
    points: Vec<Point2>,
}

impl ExactPool {
    fn new(n: usize) -> Self {
        ExactPool {
            map: HashMap::with_capacity(8 * n * n),
            points: Vec::new(),
        }
    }

    fn get(&mut self, key: ((usize, i8), (usize, i8)), p: Point2) -> usize {
        let pts = &mut self.points;
        *self.map.entry(key).or_insert_with(|| {
            pts.push(p);
            pts.len() - 1
        })
    }
}
