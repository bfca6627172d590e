use super::forms::SectorForms;
use super::triangulation::RefTriangulation;
use crate::error::Result;
use crate::linalg::{CsrMatrix, SparseCholesky};

/// Factorization of the interior block of a stiffness matrix, reusable for
/// any number of Dirichlet problems.
#[derive(Clone, Debug)]
pub struct InteriorSolver<'a> {
    tri: &'a RefTriangulation,
    a: CsrMatrix,
    chol: SparseCholesky,
}

impl<'a> InteriorSolver<'a> {
    pub fn new(tri: &'a RefTriangulation, a: CsrMatrix) -> Result<Self> {
        let keep: Vec<bool> = tri.boundary_nodes().iter().map(|b| !b).collect();
        let chol = SparseCholesky::factor(&a.principal_submatrix(&keep))?;
        Ok(InteriorSolver { tri, a, chol })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    /// Solves for `w ∈ H¹₀` with `(A (u0 + w))_I = 0`, i.e. the discrete
    /// harmonic correction of `u0`. Returns `w` as a full nodal vector.
    pub fn correction(&self, u0: &[f64]) -> Vec<f64> {
        let r = self.a.mul_vec(u0);
        let rhs: Vec<f64> = self.tri.interior_nodes().iter().map(|&g| -r[g]).collect();
        let x = self.chol.solve(&rhs);
        let mut w = vec![0.0; self.tri.n_nodes()];
        for (&g, v) in self.tri.interior_nodes().iter().zip(x) {
            w[g] = v;
        }
        w
    }

    /// Discrete solution with boundary values taken from `g` (interior
    /// entries of `g` are ignored).
    pub fn solve_dirichlet(&self, g: &[f64]) -> Vec<f64> {
        let mut u0 = g.to_vec();
        for &i in self.tri.interior_nodes() {
            u0[i] = 0.0;
        }
        let w = self.correction(&u0);
        u0.iter().zip(w).map(|(a, b)| a + b).collect()
    }

    /// `max_I |(A u)_i|`, relative to `‖A‖_∞ ‖u‖_∞`.
    pub fn residual(&self, u: &[f64]) -> f64 {
        interior_residual(self.tri, &self.a, u)
    }
}

pub fn interior_residual(tri: &RefTriangulation, a: &CsrMatrix, u: &[f64]) -> f64 {
    let r = a.mul_vec(u);
    let worst = tri.interior_nodes().iter().map(|&g| r[g].abs()).fold(0.0, f64::max);
    let scale = a.norm_inf() * u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Discrete harmonic liftings `Θ̂_i` of the boundary data `ĝ_i`, `i = 0..N`.
pub fn harmonic_liftings(tri: &RefTriangulation, forms: &SectorForms) -> Result<Vec<Vec<f64>>> {
    let solver = InteriorSolver::new(tri, forms.laplacian())?;
    Ok((0..tri.n())
        .map(|i| solver.solve_dirichlet(&tri.boundary_datum(i)))
        .collect())
}

pub fn harmonic_lifting(tri: &RefTriangulation, forms: &SectorForms, i: usize) -> Result<Vec<f64>> {
    let solver = InteriorSolver::new(tri, forms.laplacian())?;
    Ok(solver.solve_dirichlet(&tri.boundary_datum(i)))
}

/// Truth snapshots `d̂_i[E] ∈ H¹₀`, `i = 0..N`, for one parameter `θ`:
/// `Σ θ A d̂_i = -Σ θ A Θ̂_i` on interior nodes. One factorization serves
/// all right-hand sides.
pub fn solve_snapshots(
    tri: &RefTriangulation,
    forms: &SectorForms,
    theta: &[[f64; 4]],
    liftings: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let solver = InteriorSolver::new(tri, forms.combine(theta)?)?;
    Ok(liftings.iter().map(|l| solver.correction(l)).collect())
}

pub fn solve_snapshot(
    tri: &RefTriangulation,
    forms: &SectorForms,
    theta: &[[f64; 4]],
    liftings: &[Vec<f64>],
    i: usize,
) -> Result<Vec<f64>> {
    let solver = InteriorSolver::new(tri, forms.combine(theta)?)?;
    Ok(solver.correction(&liftings[i]))
}
