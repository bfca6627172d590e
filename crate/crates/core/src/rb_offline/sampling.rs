use std::f64::consts::PI;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::polymesh::{normalize_polygon, ElementMap, Point2, Polygon};
use crate::reffem::{solve_snapshots, RefTriangulation, SectorForms};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingOptions {
    /// Vertex radii are drawn uniformly from `[r_min, 1]`.
    pub r_min: f64,
    /// Angular jitter as a fraction of the sector half-angle `π/N`.
    pub angle_jitter: f64,
    pub max_tries: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            r_min: 0.5,
            angle_jitter: 0.4,
            max_tries: 1000,
        }
    }
}

impl SamplingOptions {
    /// No perturbation: every sample is the reference N-gon.
    pub const UNPERTURBED: SamplingOptions = SamplingOptions {
        r_min: 1.0,
        angle_jitter: 0.0,
        max_tries: 1,
    };
}

#[derive(Clone, Debug)]
pub struct SampleSet {
    pub n: usize,
    pub seed: u64,
    pub polygons: Vec<Polygon>,
}

pub fn sample_parameter_space(n: usize, l: usize, seed: u64) -> Result<SampleSet> {
    sample_parameter_space_with(n, l, seed, &SamplingOptions::default())
}

/// `L` normalized star-shaped N-gons obtained by perturbing the radii and
/// angles of the reference vertices.
pub fn sample_parameter_space_with(n: usize, l: usize, seed: u64, opts: &SamplingOptions) -> Result<SampleSet> {
    if l == 0 {
        return Err(Error::Config("at least one sample is required".into()));
    }
    if n < 3 {
        return Err(Error::Config(format!("N must be at least 3, got {n}")));
    }
    if !(opts.r_min > 0.0 && opts.r_min <= 1.0) || !(0.0..1.0).contains(&opts.angle_jitter) {
        return Err(Error::Config(
            "sampling needs 0 < r_min <= 1 and 0 <= jitter < 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = PI / n as f64;
    let mut polygons = Vec::with_capacity(l);
    for _ in 0..l {
        let mut tries = 0;
        let poly = loop {
            if tries == opts.max_tries.max(1) {
                return Err(Error::SamplingExhausted { tries });
            }
            tries += 1;
            let vs: Vec<Point2> = (0..n)
                .map(|k| {
                    let r = if opts.r_min < 1.0 {
                        rng.random_range(opts.r_min..=1.0)
                    } else {
                        1.0
                    };
                    let j = if opts.angle_jitter > 0.0 {
                        rng.random_range(-opts.angle_jitter..=opts.angle_jitter)
                    } else {
                        0.0
                    };
                    let t = 2.0 * PI * k as f64 / n as f64 + j * half;
                    Point2::new(r * t.cos(), r * t.sin())
                })
                .collect();
            let Ok(p) = Polygon::new(vs) else { continue };
            let Ok((normalized, _)) = normalize_polygon(&p) else {
                continue;
            };
            if Polygon::new(normalized.vertices().to_vec()).is_ok() {
                break normalized;
            }
        };
        polygons.push(poly);
    }
    Ok(SampleSet { n, seed, polygons })
}

/// Snapshots `[ℓ][j]`, one full nodal vector per sample and boundary index.
pub fn compute_snapshots(
    tri: &RefTriangulation,
    forms: &SectorForms,
    liftings: &[Vec<f64>],
    samples: &SampleSet,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if samples.n != tri.n() {
        return Err(Error::Dimension(format!(
            "samples are {}-gons, triangulation is for {}-gons",
            samples.n,
            tri.n()
        )));
    }
    samples
        .polygons
        .iter()
        .map(|p| {
            let map = ElementMap::new(p, &Matrix2::identity())?;
            solve_snapshots(tri, forms, map.theta(), liftings)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymesh::star_shape_check;
    use crate::reffem::{harmonic_liftings, interior_residual};

    #[test]
    fn unperturbed_sample_is_reference() {
        let s = sample_parameter_space_with(5, 1, 0, &SamplingOptions::UNPERTURBED).unwrap();
        let p = &s.polygons[0];
        for (k, v) in p.vertices().iter().enumerate() {
            assert!(v.dist(crate::polymesh::reference_vertex(5, k)) < 1e-14);
        }
    }

    #[test]
    fn deterministic_and_valid() {
        let a = sample_parameter_space(6, 100, 42).unwrap();
        let b = sample_parameter_space(6, 100, 42).unwrap();
        assert_eq!(a.polygons, b.polygons);
        for p in &a.polygons {
            assert!(p.centroid().norm() < 1e-14);
            assert!((p.circumradius() - 1.0).abs() < 1e-14);
            assert!(star_shape_check(p));
            assert!(Polygon::new(p.vertices().to_vec()).is_ok());
        }
        let c = sample_parameter_space(6, 100, 43).unwrap();
        assert_ne!(a.polygons, c.polygons);
    }

    #[test]
    fn snapshot_residuals() {
        let tri = RefTriangulation::new(5, 3).unwrap();
        let forms = SectorForms::assemble(&tri).unwrap();
        let lift = harmonic_liftings(&tri, &forms).unwrap();
        let samples = sample_parameter_space(5, 10, 1).unwrap();
        let snaps = compute_snapshots(&tri, &forms, &lift, &samples).unwrap();
        for (p, per_j) in samples.polygons.iter().zip(&snaps) {
            let map = ElementMap::new(p, &Matrix2::identity()).unwrap();
            let a = forms.combine(map.theta()).unwrap();
            for (j, d) in per_j.iter().enumerate() {
                let u: Vec<f64> = lift[j].iter().zip(d).map(|(x, y)| x + y).collect();
                assert!(interior_residual(&tri, &a, &u) < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_shifts_snapshot_index() {
        // rotating the polygon by 2π/N relabels the boundary indices, and the
        // reference mesh is invariant under the same rotation
        let n = 5;
        let tri = RefTriangulation::new(n, 3).unwrap();
        let forms = SectorForms::assemble(&tri).unwrap();
        let lift = harmonic_liftings(&tri, &forms).unwrap();
        let poly = sample_parameter_space(n, 1, 9).unwrap().polygons.remove(0);
        let rot = 2.0 * PI / n as f64;
        let (c, s) = (rot.cos(), rot.sin());
        let rotated = Polygon::new(
            poly.vertices()
                .iter()
                .map(|v| Point2::new(c * v.x - s * v.y, s * v.x + c * v.y))
                .collect(),
        )
        .unwrap();
        let snap = |p: &Polygon| {
            let map = ElementMap::new(p, &Matrix2::identity()).unwrap();
            solve_snapshots(&tri, &forms, map.theta(), &lift).unwrap()
        };
        let d0 = snap(&poly);
        let d1 = snap(&rotated);
        // the vertex lists coincide in position, so the element maps and
        // hence the snapshots are identical index by index
        for j in 0..n {
            for (a, b) in d0[j].iter().zip(&d1[j]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        // relabeling the polygon shifts the boundary index and rotates the mesh
        let shifted = poly.relabeled(1);
        let d2 = snap(&shifted);
        let m = tri.subdivisions();
        for j in 0..n {
            for sec in 0..n {
                for a in 0..=m {
                    for b in 0..=m - a {
                        let x = d2[j][tri.node_id(sec, a, b)];
                        let y = d0[(j + 1) % n][tri.node_id(sec + 1, a, b)];
                        assert!((x - y).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
