use std::collections::HashMap;

use super::triangulation::RefTriangulation;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::polymesh::{Point2, MATRIX_BASIS};

/// Sector stiffness `â^ν_s(w, v) = (S^ν ∇w, ∇v)_{T̂_s}` and sector mass
/// matrices, stored as value arrays over one shared sparsity pattern.
///
/// Row `r`, column `c` of the stiffness holds `â^ν_s(φ_c, φ_r)`, so that
/// `(A u)_r = â(u, φ_r)`.
#[derive(Clone, Debug)]
pub struct SectorForms {
    n: usize,
    pattern: CsrMatrix,
    /// `[s * 4 + ν]` -> values over `pattern`
    stiff: Vec<Vec<f64>>,
    mass: Vec<Vec<f64>>,
}

/// Constant gradients of the three P1 hats and the area.
pub fn p1_gradients(p: [Point2; 3]) -> Result<([Point2; 3], f64)> {
    let a2 = (p[1] - p[0]).cross(p[2] - p[0]);
    if !(a2 > 0.0) {
        return Err(Error::Numerical(format!(
            "degenerate or inverted triangle (2|T| = {a2:e})"
        )));
    }
    let g = [0, 1, 2].map(|k| {
        let (q, r) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        Point2::new((q.y - r.y) / a2, (r.x - q.x) / a2)
    });
    Ok((g, 0.5 * a2))
}

impl SectorForms {
    pub fn assemble(tri: &RefTriangulation) -> Result<Self> {
        let n = tri.n();
        let nodes = tri.nodes();
        let mut pattern = TripletBuilder::new(tri.n_nodes(), tri.n_nodes());
        for t in tri.triangles() {
            for &a in t {
                for &b in t {
                    pattern.push(a, b, 0.0);
                }
            }
        }
        let pattern = pattern.build();
        let slot = |r: usize, c: usize| -> usize {
            let lo = pattern.indptr()[r];
            let hi = pattern.indptr()[r + 1];
            lo + pattern.indices()[lo..hi].binary_search(&c).expect("pattern entry")
        };
        let nnz = pattern.nnz();
        let mut stiff = vec![vec![0.0; nnz]; 4 * n];
        let mut mass = vec![vec![0.0; nnz]; n];
        for (k, t) in tri.triangles().iter().enumerate() {
            let s = tri.sector_of_triangle()[k];
            let (g, area) = p1_gradients(t.map(|i| nodes[i]))?;
            for (a, &r) in t.iter().enumerate() {
                for (b, &c) in t.iter().enumerate() {
                    let idx = slot(r, c);
                    for (nu, sm) in MATRIX_BASIS.iter().enumerate() {
                        // (S ∇φ_c) · ∇φ_r
                        let sx = sm[0][0] * g[b].x + sm[0][1] * g[b].y;
                        let sy = sm[1][0] * g[b].x + sm[1][1] * g[b].y;
                        stiff[s * 4 + nu][idx] += area * (sx * g[a].x + sy * g[a].y);
                    }
                    mass[s][idx] += area / 12.0 * if a == b { 2.0 } else { 1.0 };
                }
            }
        }
        Ok(SectorForms {
            n,
            pattern,
            stiff,
            mass,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    fn with_values(&self, values: Vec<f64>) -> CsrMatrix {
        let mut m = self.pattern.clone();
        m.values_mut().copy_from_slice(&values);
        m
    }

    /// `A[s][ν]` as a matrix.
    pub fn stiffness(&self, s: usize, nu: usize) -> CsrMatrix {
        self.with_values(self.stiff[s * 4 + nu].clone())
    }

    pub fn mass(&self, s: usize) -> CsrMatrix {
        self.with_values(self.mass[s].clone())
    }

    pub fn stiffness_values(&self, s: usize, nu: usize) -> &[f64] {
        &self.stiff[s * 4 + nu]
    }

    pub fn mass_values(&self, s: usize) -> &[f64] {
        &self.mass[s]
    }

    /// `Σ_{s,ν} θ_s^ν A[s][ν]`.
    pub fn combine(&self, theta: &[[f64; 4]]) -> Result<CsrMatrix> {
        if theta.len() != self.n {
            return Err(Error::Dimension(format!(
                "{} sector coefficients for an {}-gon",
                theta.len(),
                self.n
            )));
        }
        let mut v = vec![0.0; self.pattern.nnz()];
        for (s, th) in theta.iter().enumerate() {
            for (nu, &c) in th.iter().enumerate() {
                if c != 0.0 {
                    for (vi, a) in v.iter_mut().zip(&self.stiff[s * 4 + nu]) {
                        *vi += c * a;
                    }
                }
            }
        }
        Ok(self.with_values(v))
    }

    /// `Σ_s γ_s Mass[s]`.
    pub fn combine_mass(&self, gamma: &[f64]) -> Result<CsrMatrix> {
        if gamma.len() != self.n {
            return Err(Error::Dimension(format!(
                "{} sector weights for an {}-gon",
                gamma.len(),
                self.n
            )));
        }
        let mut v = vec![0.0; self.pattern.nnz()];
        for (s, &g) in gamma.iter().enumerate() {
            for (vi, a) in v.iter_mut().zip(&self.mass[s]) {
                *vi += g * a;
            }
        }
        Ok(self.with_values(v))
    }

    /// Plain Laplacian `(∇·, ∇·)` on the whole reference polygon.
    pub fn laplacian(&self) -> CsrMatrix {
        self.combine(&vec![[1.0, 1.0, 0.0, 0.0]; self.n])
            .expect("matching sector count")
    }

    /// `â^ν_s(u, w)` for nodal vectors, i.e. `w^T A[s][ν] u`.
    pub fn sector_form(&self, s: usize, nu: usize, u: &[f64], w: &[f64]) -> f64 {
        bilinear(&self.pattern, &self.stiff[s * 4 + nu], u, w)
    }

    pub fn sector_mass_form(&self, s: usize, u: &[f64], w: &[f64]) -> f64 {
        bilinear(&self.pattern, &self.mass[s], u, w)
    }
}

/// `w^T A u` for values over a CSR pattern.
fn bilinear(pattern: &CsrMatrix, values: &[f64], u: &[f64], w: &[f64]) -> f64 {
    let mut total = 0.0;
    for (r, wr) in w.iter().enumerate() {
        if *wr == 0.0 {
            continue;
        }
        let mut s = 0.0;
        for k in pattern.indptr()[r]..pattern.indptr()[r + 1] {
            s += values[k] * u[pattern.indices()[k]];
        }
        total += wr * s;
    }
    total
}

/// Restriction of sector forms to the nodes of one sector, used to evaluate
/// many sector-local quadratic forms cheaply.
#[derive(Clone, Debug)]
pub struct SectorBlock {
    pub nodes: Vec<usize>,
    /// `[ν]` stiffness and mass in local numbering
    pub stiff: [CsrMatrix; 4],
    pub mass: CsrMatrix,
}

impl SectorBlock {
    pub fn new(tri: &RefTriangulation, forms: &SectorForms, s: usize) -> Self {
        let nodes = tri.sector_nodes(s);
        let local: HashMap<usize, usize> = nodes.iter().enumerate().map(|(l, &g)| (g, l)).collect();
        let restrict = |vals: &[f64]| {
            let p = forms.pattern();
            let mut t = TripletBuilder::new(nodes.len(), nodes.len());
            for (lr, &r) in nodes.iter().enumerate() {
                for k in p.indptr()[r]..p.indptr()[r + 1] {
                    if vals[k] != 0.0 {
                        if let Some(&lc) = local.get(&p.indices()[k]) {
                            t.push(lr, lc, vals[k]);
                        }
                    }
                }
            }
            t.build()
        };
        SectorBlock {
            stiff: [0, 1, 2, 3].map(|nu| restrict(forms.stiffness_values(s, nu))),
            mass: restrict(forms.mass_values(s)),
            nodes,
        }
    }

    /// Gathers a global nodal vector onto the sector nodes.
    pub fn gather(&self, u: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&g| u[g]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;

    #[test]
    fn constants_in_kernel_and_mass_is_area() {
        let t = RefTriangulation::new(5, 3).unwrap();
        let f = SectorForms::assemble(&t).unwrap();
        let one = vec![1.0; t.n_nodes()];
        for s in 0..5 {
            for nu in 0..4 {
                let r = f.stiffness(s, nu).mul_vec(&one);
                assert!(r.iter().all(|v| v.abs() < 1e-12));
            }
        }
        let area = super::super::build_reference_ngon(5).unwrap().area();
        let total = f.combine_mass(&[1.0; 5]).unwrap().quad_form(&one, &one);
        assert!((total - area).abs() < 1e-13);
    }

    #[test]
    fn symmetry_structure() {
        let t = RefTriangulation::new(4, 2).unwrap();
        let f = SectorForms::assemble(&t).unwrap();
        for s in 0..4 {
            for nu in 0..3 {
                assert!(f.stiffness(s, nu).asymmetry() < 1e-14);
            }
            let a4 = f.stiffness(s, 3);
            let sum = a4.add_scaled(1.0, &a4.transpose()).unwrap();
            assert!(sum.max_abs() < 1e-14);
            assert!(f.mass(s).asymmetry() < 1e-16);
        }
    }

    #[test]
    fn identity_pattern_matches_direct_assembly() {
        // independent oracle: gradients from the inverse Jacobian
        let t = RefTriangulation::new(6, 2).unwrap();
        let f = SectorForms::assemble(&t).unwrap();
        let n = t.n_nodes();
        let mut direct = nalgebra::DMatrix::<f64>::zeros(n, n);
        for tri in t.triangles() {
            let p = tri.map(|i| t.nodes()[i]);
            let j = Matrix2::new(p[1].x - p[0].x, p[2].x - p[0].x, p[1].y - p[0].y, p[2].y - p[0].y);
            let jinv_t = j.try_inverse().unwrap().transpose();
            let ref_grads = [(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)];
            let g: Vec<nalgebra::Vector2<f64>> = ref_grads
                .iter()
                .map(|&(a, b)| jinv_t * nalgebra::Vector2::new(a, b))
                .collect();
            let area = 0.5 * j.determinant();
            for a in 0..3 {
                for b in 0..3 {
                    direct[(tri[a], tri[b])] += area * g[a].dot(&g[b]);
                }
            }
        }
        let lap = f.laplacian().to_dense();
        assert!((lap - direct).abs().max() < 1e-14);
    }
}
