//! Clipped Voronoi meshes with Lloyd relaxation.
//!
//! Non-convex or multi-region domains are handled as a union of axis-aligned
//! rectangles: each rectangle gets its own Lloyd-relaxed Voronoi diagram, and
//! the pieces are glued by inserting the vertices that lie on shared
//! interface edges. Very short edges are collapsed before validation.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::generate::DELTA_REGION;
use super::mesh::PolyMesh;
use super::point::Point2;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        min: Point2::ORIGIN,
        max: Point2 { x: 1.0, y: 1.0 },
    };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect {
        Rect {
            min: Point2::new(x0, y0),
            max: Point2::new(x1, y1),
        }
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }

    fn corners(&self) -> Vec<Point2> {
        vec![
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoronoiOptions {
    pub lloyd_iters: usize,
    /// Edges shorter than this fraction of the mean cell size are collapsed.
    pub collapse_fraction: f64,
}

impl Default for VoronoiOptions {
    fn default() -> Self {
        VoronoiOptions {
            lloyd_iters: 10,
            collapse_fraction: 0.05,
        }
    }
}

/// Lloyd-relaxed Voronoi mesh of (0,1)^2 with `n_cells` uniformly random seeds.
pub fn generate_voronoi_mesh(n_cells: usize, seed: u64, lloyd_iters: usize) -> Result<PolyMesh> {
    let opts = VoronoiOptions {
        lloyd_iters,
        ..Default::default()
    };
    voronoi_on_rects(&[(Rect::UNIT, 0)], n_cells, seed, &opts)
}

/// Voronoi mesh of the unit square from explicit seeds.
pub fn voronoi_mesh_from_seeds(seeds: &[Point2], lloyd_iters: usize) -> Result<PolyMesh> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed required".into()));
    }
    let opts = VoronoiOptions {
        lloyd_iters,
        ..Default::default()
    };
    let cells = relaxed_cells(Rect::UNIT, seeds.to_vec(), opts.lloyd_iters);
    let lines = domain_lines(&[Rect::UNIT]);
    glue(
        cells.into_iter().map(|c| (c, 0)).collect(),
        &lines,
        (1.0 / seeds.len() as f64).sqrt(),
        &opts,
    )
}

/// Voronoi mesh of the L-shaped domain (-1,1)^2 \ (0,1)x(-1,0).
pub fn generate_voronoi_lshape(n_cells: usize, seed: u64, opts: &VoronoiOptions) -> Result<PolyMesh> {
    let rects = [
        (Rect::new(-1.0, -1.0, 0.0, 0.0), 0),
        (Rect::new(-1.0, 0.0, 0.0, 1.0), 0),
        (Rect::new(0.0, 0.0, 1.0, 1.0), 0),
    ];
    voronoi_on_rects(&rects, n_cells, seed, opts)
}

/// Voronoi mesh of (-1,1)^2 conforming to the quadrant interfaces, with the
/// first and third quadrants tagged [`DELTA_REGION`].
pub fn generate_voronoi_checkerboard(n_cells: usize, seed: u64, opts: &VoronoiOptions) -> Result<PolyMesh> {
    let rects = [
        (Rect::new(0.0, 0.0, 1.0, 1.0), DELTA_REGION),
        (Rect::new(-1.0, 0.0, 0.0, 1.0), 0),
        (Rect::new(-1.0, -1.0, 0.0, 0.0), DELTA_REGION),
        (Rect::new(0.0, -1.0, 1.0, 0.0), 0),
    ];
    voronoi_on_rects(&rects, n_cells, seed, opts)
}

/// Independent relaxed Voronoi diagrams on each rectangle, glued into one mesh.
/// Seeds are distributed proportionally to rectangle area.
pub fn voronoi_on_rects(rects: &[(Rect, i32)], n_cells: usize, seed: u64, opts: &VoronoiOptions) -> Result<PolyMesh> {
    if n_cells < rects.len() {
        return Err(Error::Config(format!(
            "need at least {} cells for this domain, got {n_cells}",
            rects.len()
        )));
    }
    let total: f64 = rects.iter().map(|(r, _)| r.area()).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::with_capacity(n_cells);
    let mut assigned = 0;
    for (k, (rect, region)) in rects.iter().enumerate() {
        let count = if k + 1 == rects.len() {
            n_cells - assigned
        } else {
            ((n_cells as f64 * rect.area() / total).round() as usize).max(1)
        };
        assigned += count;
        let seeds: Vec<Point2> = (0..count)
            .map(|_| {
                Point2::new(
                    rng.random_range(rect.min.x..rect.max.x),
                    rng.random_range(rect.min.y..rect.max.y),
                )
            })
            .collect();
        for cell in relaxed_cells(*rect, seeds, opts.lloyd_iters) {
            all.push((cell, *region));
        }
    }
    let just_rects: Vec<Rect> = rects.iter().map(|(r, _)| *r).collect();
    glue(all, &domain_lines(&just_rects), (total / n_cells as f64).sqrt(), opts)
}

fn relaxed_cells(rect: Rect, mut seeds: Vec<Point2>, iters: usize) -> Vec<Vec<Point2>> {
    let mut cells = voronoi_cells(rect, &seeds);
    for _ in 0..iters {
        for (s, c) in seeds.iter_mut().zip(&cells) {
            if let Some(g) = centroid(c) {
                *s = g;
            }
        }
        cells = voronoi_cells(rect, &seeds);
    }
    cells
}

fn centroid(poly: &[Point2]) -> Option<Point2> {
    let n = poly.len();
    if n < 3 {
        return None;
    }
    let o = poly[0];
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = poly[i] - o;
        let q = poly[(i + 1) % n] - o;
        let w = p.cross(q);
        a2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    (a2 > 0.0).then(|| Point2::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2)))
}

/// Voronoi cells of `seeds` clipped to `rect`, one per seed (possibly empty
/// for coincident seeds).
fn voronoi_cells(rect: Rect, seeds: &[Point2]) -> Vec<Vec<Point2>> {
    let grid = SeedGrid::new(rect, seeds);
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut cell = rect.corners();
            let mut ring = 0usize;
            loop {
                let radius = cell.iter().map(|v| v.dist(s)).fold(0.0, f64::max);
                // every seed beyond 2 * radius leaves the cell untouched
                if ring > 0 && (ring as f64 - 1.0) * grid.cell > 2.0 * radius {
                    break;
                }
                let more = grid.for_ring(s, ring, |j| {
                    if j != i {
                        let t = seeds[j];
                        let normal = t - s;
                        let offset = 0.5 * (t.dot(t) - s.dot(s));
                        cell = clip_half_plane(&cell, normal, offset, rect);
                    }
                });
                if !more {
                    break;
                }
                ring += 1;
            }
            cell
        })
        .collect()
}

/// Keeps `{p : normal . p <= offset}`; intersection points that land on the
/// rectangle boundary are snapped onto it.
fn clip_half_plane(poly: &[Point2], normal: Point2, offset: f64, rect: Rect) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let dp = normal.dot(p) - offset;
        let dq = normal.dot(q) - offset;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let t = dp / (dp - dq);
            let mut x = p.lerp(q, t);
            // keep boundary coordinates exact
            if p.x == q.x {
                x.x = p.x;
            }
            if p.y == q.y {
                x.y = p.y;
            }
            x.x = x.x.clamp(rect.min.x, rect.max.x);
            x.y = x.y.clamp(rect.min.y, rect.max.y);
            out.push(x);
        }
    }
    out
}

struct SeedGrid {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl SeedGrid {
    fn new(rect: Rect, seeds: &[Point2]) -> Self {
        let w = rect.max.x - rect.min.x;
        let h = rect.max.y - rect.min.y;
        let cell = (rect.area() / seeds.len().max(1) as f64).sqrt();
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, s) in seeds.iter().enumerate() {
            let (bx, by) = Self::bucket_of(rect.min, cell, nx, ny, *s);
            buckets[by * nx + bx].push(i);
        }
        SeedGrid {
            origin: rect.min,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn bucket_of(origin: Point2, cell: f64, nx: usize, ny: usize, p: Point2) -> (usize, usize) {
        let bx = (((p.x - origin.x) / cell).floor().max(0.0) as usize).min(nx - 1);
        let by = (((p.y - origin.y) / cell).floor().max(0.0) as usize).min(ny - 1);
        (bx, by)
    }

    /// Visits seeds in buckets at Chebyshev distance `ring` from the bucket of
    /// `p`. Returns false once the ring lies entirely outside the grid.
    fn for_ring(&self, p: Point2, ring: usize, mut f: impl FnMut(usize)) -> bool {
        let (bx, by) = Self::bucket_of(self.origin, self.cell, self.nx, self.ny, p);
        let (bx, by, r) = (bx as i64, by as i64, ring as i64);
        let mut any = false;
        for j in by - r..=by + r {
            for i in bx - r..=bx + r {
                if (i - bx).abs().max((j - by).abs()) != r {
                    continue;
                }
                if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                    continue;
                }
                any = true;
                for &s in &self.buckets[j as usize * self.nx + i as usize] {
                    f(s);
                }
            }
        }
        any
    }
}

/// Axis-aligned lines carrying domain boundaries or region interfaces.
struct Lines {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

fn domain_lines(rects: &[Rect]) -> Lines {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in rects {
        xs.extend([r.min.x, r.max.x]);
        ys.extend([r.min.y, r.max.y]);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    Lines { xs, ys }
}

impl Lines {
    fn constraint(&self, p: Point2, tol: f64) -> (Option<f64>, Option<f64>) {
        (
            self.xs.iter().copied().find(|x| (p.x - x).abs() <= tol),
            self.ys.iter().copied().find(|y| (p.y - y).abs() <= tol),
        )
    }
}

/// Merges coincident points, inserts hanging vertices, collapses short edges
/// and validates the result.
fn glue(cells: Vec<(Vec<Point2>, i32)>, lines: &Lines, mean_size: f64, opts: &VoronoiOptions) -> Result<PolyMesh> {
    let tol = 1e-10 * mean_size.max(1e-300);
    let mut pool = PointPool::new(tol);
    let mut topo: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
    let mut regions = Vec::with_capacity(cells.len());
    for (poly, region) in cells {
        let mut ids: Vec<usize> = poly.iter().map(|&p| pool.insert(p)).collect();
        dedup_cyclic(&mut ids);
        if ids.len() >= 3 {
            topo.push(ids);
            regions.push(region);
        }
    }
    let mut points = pool.points;
    insert_hanging_vertices(&points, &mut topo, tol);
    collapse_short_edges(
        &mut points,
        &mut topo,
        &mut regions,
        lines,
        opts.collapse_fraction * mean_size,
        tol,
    );
    // drop points no longer referenced
    let mut remap = vec![usize::MAX; points.len()];
    let mut compact = Vec::new();
    for cell in &mut topo {
        for v in cell.iter_mut() {
            if remap[*v] == usize::MAX {
                remap[*v] = compact.len();
                compact.push(points[*v]);
            }
            *v = remap[*v];
        }
    }
    PolyMesh::new(compact, topo, regions).map_err(|e| match e {
        Error::Topology { cell, msg } => Error::DegenerateCell { cell, msg },
        Error::NotStarShaped { cell: Some(cell) } => Error::DegenerateCell {
            cell,
            msg: "not star-shaped after relaxation".into(),
        },
        e => e,
    })
}

fn dedup_cyclic(ids: &mut Vec<usize>) {
    ids.dedup();
    while ids.len() > 1 && ids.first() == ids.last() {
        ids.pop();
    }
}

struct PointPool {
    tol: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point2>,
}

impl PointPool {
    fn new(tol: f64) -> Self {
        PointPool {
            tol,
            grid: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.tol).floor() as i64, (p.y / self.tol).floor() as i64)
    }

    fn insert(&mut self, p: Point2) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.grid.get(&(kx + dx, ky + dy)) {
                    for &i in ids {
                        if self.points[i].dist(p) <= self.tol {
                            return i;
                        }
                    }
                }
            }
        }
        self.points.push(p);
        let id = self.points.len() - 1;
        self.grid.entry((kx, ky)).or_default().push(id);
        id
    }
}

/// Inserts into each cell edge every mesh point lying strictly inside it.
fn insert_hanging_vertices(points: &[Point2], cells: &mut [Vec<usize>], tol: f64) {
    // bucket grid sized by the mean edge length
    let (mut lsum, mut lcount) = (0.0, 0usize);
    for c in cells.iter() {
        for k in 0..c.len() {
            lsum += points[c[k]].dist(points[c[(k + 1) % c.len()]]);
            lcount += 1;
        }
    }
    let size = (lsum / lcount.max(1) as f64).max(tol * 10.0);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |p: Point2| ((p.x / size).floor() as i64, (p.y / size).floor() as i64);
    for (i, &p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    for cell in cells.iter_mut() {
        let n = cell.len();
        let mut out = Vec::with_capacity(n + 2);
        for k in 0..n {
            let (a, b) = (cell[k], cell[(k + 1) % n]);
            out.push(a);
            let (pa, pb) = (points[a], points[b]);
            let d = pb - pa;
            let len2 = d.dot(d);
            let (ka, kb) = (key(pa), key(pb));
            let mut found: Vec<(f64, usize)> = Vec::new();
            for gx in ka.0.min(kb.0) - 1..=ka.0.max(kb.0) + 1 {
                for gy in ka.1.min(kb.1) - 1..=ka.1.max(kb.1) + 1 {
                    if let Some(ids) = grid.get(&(gx, gy)) {
                        for &i in ids {
                            if i == a || i == b {
                                continue;
                            }
                            let r = points[i] - pa;
                            let t = r.dot(d) / len2;
                            if t <= 0.0 || t >= 1.0 {
                                continue;
                            }
                            if (r.cross(d)).abs() / len2.sqrt() <= tol {
                                found.push((t, i));
                            }
                        }
                    }
                }
            }
            found.sort_by(|x, y| x.0.total_cmp(&y.0));
            out.extend(found.into_iter().map(|(_, i)| i));
        }
        *cell = out;
    }
}

/// Repeatedly merges the endpoints of the shortest edge below `min_len`.
/// Merged points respect boundary and interface lines; merges that would
/// move a point off its line are skipped.
fn collapse_short_edges(
    points: &mut [Point2],
    cells: &mut Vec<Vec<usize>>,
    regions: &mut Vec<i32>,
    lines: &Lines,
    min_len: f64,
    tol: f64,
) {
    let mut blocked: std::collections::HashSet<(usize, usize)> = Default::default();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for c in cells.iter() {
            let n = c.len();
            for k in 0..n {
                let (a, b) = (c[k], c[(k + 1) % n]);
                let key = (a.min(b), a.max(b));
                if blocked.contains(&key) {
                    continue;
                }
                let l = points[a].dist(points[b]);
                if l < min_len && best.is_none_or(|(bl, _, _)| l < bl) {
                    best = Some((l, key.0, key.1));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        let Some(target) = merged_position(points[a], points[b], lines, tol) else {
            blocked.insert((a, b));
            continue;
        };
        points[a] = target;
        for c in cells.iter_mut() {
            for v in c.iter_mut() {
                if *v == b {
                    *v = a;
                }
            }
            dedup_cyclic(c);
        }
        let mut k = 0;
        cells.retain(|c| {
            let keep = c.len() >= 3;
            if !keep {
                regions.remove(k);
            } else {
                k += 1;
            }
            keep
        });
    }
}

fn merged_position(p: Point2, q: Point2, lines: &Lines, tol: f64) -> Option<Point2> {
    let (px, py) = lines.constraint(p, tol);
    let (qx, qy) = lines.constraint(q, tol);
    let pinned_p = px.is_some() && py.is_some();
    let pinned_q = qx.is_some() && qy.is_some();
    match (pinned_p, pinned_q) {
        (true, true) => return None,
        (true, false) => return compatible(qx, qy, p).then_some(p),
        (false, true) => return compatible(px, py, q).then_some(q),
        _ => {}
    }
    let mid = p.lerp(q, 0.5);
    let x = merge_line(px, qx)?;
    let y = merge_line(py, qy)?;
    Some(Point2::new(x.unwrap_or(mid.x), y.unwrap_or(mid.y)))
}

/// A free point may move onto `target` only if `target` keeps its line.
fn compatible(cx: Option<f64>, cy: Option<f64>, target: Point2) -> bool {
    cx.is_none_or(|x| x == target.x) && cy.is_none_or(|y| y == target.y)
}

fn merge_line(a: Option<f64>, b: Option<f64>) -> Option<Option<f64>> {
    match (a, b) {
        (Some(a), Some(b)) if a != b => None,
        (Some(a), _) | (_, Some(a)) => Some(Some(a)),
        (None, None) => Some(None),
    }
}
