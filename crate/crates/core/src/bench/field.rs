use crate::eigsolve::{GlobalSystem, RbLibrary};
use crate::error::{Error, Result};
use crate::polymesh::{Point2, PolyMesh};
use crate::reffem::p1_gradients;
use crate::vem_core::quadrature::DEGREE5;
use crate::vem_core::PulledBack;

/// `(|u - u_h|_1, ‖u - u_h‖_0)` for the vertex vector `u_h`.
///
/// Reduced-basis elements are integrated on their pulled-back fine meshes
/// with the full local function; stabilized VEM elements use `Π∇u_h` on the
/// centroid fan.
pub fn compute_field_errors(
    mesh: &PolyMesh,
    sys: &GlobalSystem,
    rb: Option<&RbLibrary>,
    u_h: &[f64],
    u: &dyn Fn(Point2) -> f64,
    grad_u: &dyn Fn(Point2) -> Point2,
) -> Result<(f64, f64)> {
    if u_h.len() != mesh.n_points() || sys.elements.len() != mesh.n_cells() {
        return Err(Error::Dimension(format!(
            "solution of length {} on a mesh with {} vertices",
            u_h.len(),
            mesh.n_points()
        )));
    }
    let (mut h1, mut l2) = (0.0, 0.0);
    for (c, data) in sys.elements.iter().enumerate() {
        let poly = mesh.polygon(c);
        let local: Vec<f64> = mesh.cell(c).iter().map(|&g| u_h[g]).collect();
        let proj = &data.proj;
        match &data.ctx {
            Some(ctx) => {
                let n = poly.n_vertices();
                let lib = rb.ok_or(Error::MissingOfflineDb(n))?;
                let pulled = PulledBack::new(lib.triangulation(n)?, lib.get(n)?, ctx).map_err(|e| e.in_cell(c))?;
                let (w, pu) = pulled.local_function(proj, &local);
                let gpu = Point2::new(pu[1] / proj.h, pu[2] / proj.h);
                for (t, conn) in pulled.triangles.iter().zip(&pulled.connectivity) {
                    let (g, _) = p1_gradients(*t).map_err(|e| e.in_cell(c))?;
                    let gw = (0..3).fold(gpu, |acc, i| acc + g[i] * w[conn[i]]);
                    for (p, l, wt) in DEGREE5.map(*t) {
                        let m = proj.monomials(p);
                        let v = (0..3).map(|i| l[i] * w[conn[i]] + pu[i] * m[i]).sum::<f64>();
                        let de = grad_u(p) - gw;
                        h1 += wt * de.dot(de);
                        l2 += wt * (u(p) - v).powi(2);
                    }
                }
            }
            None => {
                let pu: Vec<f64> = (0..3)
                    .map(|a| (0..proj.n()).map(|j| proj.pin_poly[(a, j)] * local[j]).sum())
                    .collect();
                let gpu = Point2::new(pu[1] / proj.h, pu[2] / proj.h);
                for t in poly.fan_triangles() {
                    for (p, _, wt) in DEGREE5.map(t) {
                        let m = proj.monomials(p);
                        let v = pu[0] * m[0] + pu[1] * m[1] + pu[2] * m[2];
                        let de = grad_u(p) - gpu;
                        h1 += wt * de.dot(de);
                        l2 += wt * (u(p) - v).powi(2);
                    }
                }
            }
        }
    }
    Ok((h1.sqrt(), l2.sqrt()))
}
