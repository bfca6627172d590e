#![allow(dead_code)]

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbvem::polymesh::{ElementMap, Point2, Polygon};
use rbvem::rb_offline::{build_offline_db, OfflineConfig, OfflineDb};
use rbvem::reffem::RefTriangulation;

pub fn small_db(n: usize, m: usize, l: usize, level: u32) -> OfflineDb {
    let cfg = OfflineConfig {
        l,
        level,
        seed: 17,
        ..OfflineConfig::new(n, m)
    };
    build_offline_db(&cfg).unwrap()
}

/// Physical vertices of every fine triangle, pushed forward through the
/// inverse sector maps.
pub fn physical_triangles(tri: &RefTriangulation, map: &ElementMap) -> Vec<([usize; 3], [Point2; 3])> {
    tri.triangles()
        .iter()
        .zip(tri.sector_of_triangle())
        .map(|(t, &s)| (*t, t.map(|i| map.to_physical(s, tri.nodes()[i]))))
        .collect()
}

fn grads(p: [Point2; 3]) -> ([[f64; 2]; 3], f64) {
    let j = Matrix2::new(p[1].x - p[0].x, p[2].x - p[0].x, p[1].y - p[0].y, p[2].y - p[0].y);
    let jit = j.try_inverse().unwrap().transpose();
    let g = [(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)].map(|(a, b)| {
        let v = jit * nalgebra::Vector2::new(a, b);
        [v.x, v.y]
    });
    (g, 0.5 * j.determinant())
}

/// `(κ∇u, ∇w)_E` by P1 integration on the pulled-back fine mesh.
pub fn direct_stiffness(phys: &[([usize; 3], [Point2; 3])], kappa: &Matrix2<f64>, u: &[f64], w: &[f64]) -> f64 {
    let mut total = 0.0;
    for (t, p) in phys {
        let (g, area) = grads(*p);
        let mut gu = [0.0; 2];
        let mut gw = [0.0; 2];
        for k in 0..3 {
            for d in 0..2 {
                gu[d] += u[t[k]] * g[k][d];
                gw[d] += w[t[k]] * g[k][d];
            }
        }
        let ku = [
            kappa[(0, 0)] * gu[0] + kappa[(0, 1)] * gu[1],
            kappa[(1, 0)] * gu[0] + kappa[(1, 1)] * gu[1],
        ];
        total += area * (ku[0] * gw[0] + ku[1] * gw[1]);
    }
    total
}

/// `(u, w)_E` with the exact P1 mass matrix on the pulled-back fine mesh.
pub fn direct_mass(phys: &[([usize; 3], [Point2; 3])], u: &[f64], w: &[f64]) -> f64 {
    let mut total = 0.0;
    for (t, p) in phys {
        let (_, area) = grads(*p);
        for a in 0..3 {
            for b in 0..3 {
                total += area / 12.0 * if a == b { 2.0 } else { 1.0 } * u[t[a]] * w[t[b]];
            }
        }
    }
    total
}

/// Random star-shaped polygon with `n` vertices around `center`.
pub fn random_star(n: usize, rng: &mut ChaCha8Rng) -> Polygon {
    loop {
        let scale = rng.random_range(0.05..3.0);
        let c = Point2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let vs: Vec<Point2> = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * (k as f64 + rng.random_range(-0.35..0.35)) / n as f64 + 0.3;
                let r = scale * rng.random_range(0.4..1.0);
                Point2::new(c.x + r * t.cos(), c.y + r * t.sin())
            })
            .collect();
        if let Ok(p) = Polygon::new(vs) {
            if rbvem::polymesh::star_shape_check(&p) {
                return p;
            }
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
