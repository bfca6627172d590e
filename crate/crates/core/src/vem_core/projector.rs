use nalgebra::{DMatrix, Matrix2, Matrix3};

use super::quadrature::DEGREE2;
use crate::error::{Error, Result};
use crate::polymesh::{Point2, Polygon};

/// Elliptic projection of the lowest-order local space onto linears, in the
/// scaled monomial basis `{1, (x - x_K)/h_E, (y - y_K)/h_E}`.
#[derive(Clone, Debug)]
pub struct ProjectorMatrices {
    /// 3 x N: coefficients of `Π∇e_j`
    pub pin_poly: DMatrix<f64>,
    /// N x N: `(Π∇e_j)(v_k)` in row `k`, column `j`
    pub pin_dof: DMatrix<f64>,
    /// `I - pin_dof`
    pub r: DMatrix<f64>,
    pub centroid: Point2,
    pub h: f64,
    pub area: f64,
}

impl ProjectorMatrices {
    pub fn n(&self) -> usize {
        self.pin_poly.ncols()
    }

    /// Scaled monomials at `x`.
    pub fn monomials(&self, x: Point2) -> [f64; 3] {
        [1.0, (x.x - self.centroid.x) / self.h, (x.y - self.centroid.y) / self.h]
    }

    /// `(Π∇e_j)(x)`.
    pub fn eval(&self, j: usize, x: Point2) -> f64 {
        let m = self.monomials(x);
        (0..3).map(|a| self.pin_poly[(a, j)] * m[a]).sum()
    }

    /// Constant gradient of `Π∇e_j`.
    pub fn grad(&self, j: usize) -> Point2 {
        Point2::new(self.pin_poly[(1, j)] / self.h, self.pin_poly[(2, j)] / self.h)
    }

    /// Values of every `Π∇e_j` at the centroid followed by the vertices,
    /// (N+1) x N.
    pub fn fan_nodal_values(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n + 1, n, |k, j| {
            if k == 0 {
                self.pin_poly[(0, j)]
            } else {
                self.pin_dof[(k - 1, j)]
            }
        })
    }
}

pub fn pi_nabla_matrices(poly: &Polygon) -> Result<ProjectorMatrices> {
    let n = poly.n_vertices();
    let xk = poly.centroid();
    let h = poly.diameter();
    let area = poly.area();
    if !(area > 0.0 && h > 0.0) {
        return Err(Error::InvalidPolygon("degenerate element geometry".into()));
    }
    let perimeter: f64 = poly.edges().map(|(a, b)| a.dist(b)).sum();
    // B: right-hand sides. Row 0 holds ∫_∂E e_i, rows 1-2 hold (∇m_α, ∇e_i)_E
    // = ∫_∂E (∇m_α · n) e_i with the trapezoid rule exact on each edge.
    let mut b = DMatrix::zeros(3, n);
    for i in 0..n {
        let (prev, cur, next) = (poly.vertex(i + n - 1), poly.vertex(i), poly.vertex(i + 1));
        b[(0, i)] = 0.5 * (prev.dist(cur) + cur.dist(next));
        // outward normal times length of edge (a, b) is (b.y - a.y, a.x - b.x)
        let nx = 0.5 * ((cur.y - prev.y) + (next.y - cur.y));
        let ny = 0.5 * ((prev.x - cur.x) + (cur.x - next.x));
        b[(1, i)] = nx / h;
        b[(2, i)] = ny / h;
    }
    let mut d = DMatrix::zeros(n, 3);
    for i in 0..n {
        let v = poly.vertex(i);
        d[(i, 0)] = 1.0;
        d[(i, 1)] = (v.x - xk.x) / h;
        d[(i, 2)] = (v.y - xk.y) / h;
    }
    let g = &b * &d;
    // exact first row: ∫_∂E m_α, the monomials being linear along each edge
    let mut g0 = [perimeter, 0.0, 0.0];
    for (a, c) in poly.edges() {
        let len = a.dist(c);
        g0[1] += len * (0.5 * (a.x + c.x) - xk.x) / h;
        g0[2] += len * (0.5 * (a.y + c.y) - xk.y) / h;
    }
    debug_assert!((0..3).all(|k| (g[(0, k)] - g0[k]).abs() <= 1e-12 * perimeter));
    let g = Matrix3::from_fn(|r, c| g[(r, c)]);
    let ginv = g
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular projector matrix".into()))?;
    let ginv = DMatrix::from_fn(3, 3, |r, c| ginv[(r, c)]);
    let pin_poly = ginv * b;
    let pin_dof = &d * &pin_poly;
    let r = DMatrix::identity(n, n) - &pin_dof;
    Ok(ProjectorMatrices {
        pin_poly,
        pin_dof,
        r,
        centroid: xk,
        h,
        area,
    })
}

/// `Kc_ij = (κ ∇Π∇e_j, ∇Π∇e_i)_E` and `Mc_ij = (Π∇e_j, Π∇e_i)_E`.
pub fn consistency_matrices(
    poly: &Polygon,
    kappa: &Matrix2<f64>,
    proj: &ProjectorMatrices,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = proj.n();
    let ks = 0.5 * (kappa + kappa.transpose());
    let mut kc = DMatrix::zeros(n, n);
    for i in 0..n {
        let gi = proj.grad(i);
        for j in 0..n {
            let gj = proj.grad(j);
            let kx = ks[(0, 0)] * gj.x + ks[(0, 1)] * gj.y;
            let ky = ks[(1, 0)] * gj.x + ks[(1, 1)] * gj.y;
            kc[(i, j)] = proj.area * (kx * gi.x + ky * gi.y);
        }
    }
    let mut hm = DMatrix::<f64>::zeros(3, 3);
    for t in poly.fan_triangles() {
        for (p, _, w) in DEGREE2.map(t) {
            let m = proj.monomials(p);
            for a in 0..3 {
                for b in 0..3 {
                    hm[(a, b)] += w * m[a] * m[b];
                }
            }
        }
    }
    let mc = proj.pin_poly.transpose() * hm * &proj.pin_poly;
    (kc, symmetrize(mc))
}

pub(crate) fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabMode {
    Stiffness,
    Mass,
}

/// Raw dofi-dofi form: `σ I` for stiffness, `τ h_E² I` for mass.
pub fn dofi_dofi_stab(poly: &Polygon, mode: StabMode, parameter: f64) -> DMatrix<f64> {
    let n = poly.n_vertices();
    let s = match mode {
        StabMode::Stiffness => parameter,
        StabMode::Mass => parameter * poly.diameter().powi(2),
    };
    DMatrix::identity(n, n) * s
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

    fn pentagon() -> Polygon {
        Polygon::new(vec![
            Point2::new(0.1, 0.0),
            Point2::new(1.2, 0.2),
            Point2::new(1.4, 1.0),
            Point2::new(0.5, 1.5),
            Point2::new(-0.3, 0.7),
        ])
        .unwrap()
    }

    #[test]
    fn reproduces_linears_and_is_idempotent() {
        for poly in [square(), pentagon()] {
            let p = pi_nabla_matrices(&poly).unwrap();
            let n = poly.n_vertices();
            for f in [
                |_v: Point2| 1.0,
                |v: Point2| v.x,
                |v: Point2| 2.0 * v.y - 0.5 * v.x + 3.0,
            ] {
                let dof = nalgebra::DVector::from_iterator(n, poly.vertices().iter().map(|&v| f(v)));
                assert!((&p.pin_dof * &dof - &dof).abs().max() < 1e-13);
                assert!((&p.r * &dof).abs().max() < 1e-13);
            }
            assert!((&p.pin_dof * &p.pin_dof - &p.pin_dof).abs().max() < 1e-12);
            let consts: f64 = (0..n).map(|j| p.pin_poly[(0, j)]).sum();
            assert!((consts - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn square_by_hand() {
        // e_0 is the hat at (0,0); ∫_∂E e_0 = 1, ∫_E ∇e_0 = (-1/2, -1/2)
        // so ∇Π∇e_0 = (-1/2, -1/2), and the boundary mean fixes the constant:
        // ∫_∂E Π∇e_0 = 4 c + ∫_∂E (-(x-1/2) - (y-1/2))/2 = 4 c = 1
        let p = pi_nabla_matrices(&square()).unwrap();
        let g = p.grad(0);
        assert!((g.x + 0.5).abs() < 1e-14 && (g.y + 0.5).abs() < 1e-14);
        assert!((p.eval(0, Point2::new(0.5, 0.5)) - 0.25).abs() < 1e-14);
        let expect = [0.75, 0.25, -0.25, 0.25];
        for (k, e) in expect.iter().enumerate() {
            assert!((p.pin_dof[(k, 0)] - e).abs() < 1e-14);
        }
        let (kc, mc) = consistency_matrices(&square(), &Matrix2::identity(), &p);
        // gradients (∓1/2, ∓1/2) give Kc_00 = 1/2, Kc_02 = -1/2, Kc_01 = 0
        assert!((kc[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((kc[(0, 2)] + 0.5).abs() < 1e-14);
        assert!(kc[(0, 1)].abs() < 1e-14);
        // ∫ (1/4 - (x-1/2)/2 - (y-1/2)/2)^2 = 1/16 + 2 * (1/4)(1/12) = 5/48
        assert!((mc[(0, 0)] - 5.0 / 48.0).abs() < 1e-14);
    }

    #[test]
    fn consistency_kernel_and_mass_sum() {
        for poly in [square(), pentagon()] {
            let p = pi_nabla_matrices(&poly).unwrap();
            let (kc, mc) = consistency_matrices(&poly, &Matrix2::new(2.0, 0.3, 0.3, 1.0), &p);
            let one = nalgebra::DVector::from_element(poly.n_vertices(), 1.0);
            assert!((&kc * &one).abs().max() < 1e-13);
            assert!((mc.sum() - poly.area()).abs() < 1e-13);
        }
    }

    #[test]
    fn dofi_dofi_scaling() {
        let s = dofi_dofi_stab(&square(), StabMode::Mass, 1.0);
        assert!((s - DMatrix::identity(4, 4) * 2.0).abs().max() < 1e-14);
        assert_eq!(dofi_dofi_stab(&square(), StabMode::Stiffness, 0.0).abs().max(), 0.0);
    }
}
