use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};

use super::projector::{consistency_matrices, dofi_dofi_stab, symmetrize, ProjectorMatrices, StabMode};
use super::quadrature::{DEGREE4, DEGREE5};
use crate::error::{Error, Result};
use crate::polymesh::{ElementMap, Point2, Polygon};
use crate::rb_offline::OfflineDb;
use crate::rb_online::{reconstruct_basis_fe, OnlineElementCtx};
use crate::reffem::RefTriangulation;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Stabilized VEM with dofi-dofi stabilization weights.
    Vem {
        alpha: f64,
        beta: f64,
    },
    RbVem,
    /// Reduced-basis stabilization; `chi` toggles the mass term.
    RbStab {
        chi: u8,
    },
}

impl Method {
    pub fn is_rb(&self) -> bool {
        !matches!(self, Method::Vem { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Method::Vem { alpha, beta } if !(alpha >= 0.0 && beta >= 0.0) => Err(Error::Config(format!(
                "alpha and beta must be nonnegative, got {alpha}, {beta}"
            ))),
            Method::RbStab { chi } if chi > 1 => Err(Error::Config(format!("chi must be 0 or 1, got {chi}"))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Vem { alpha, beta } => write!(f, "vem(alpha={alpha},beta={beta})"),
            Method::RbVem => write!(f, "rbvem"),
            Method::RbStab { chi } => write!(f, "rbstab(chi={chi})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ElementMatrices {
    pub k: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub method: Method,
}

pub fn element_vem(
    poly: &Polygon,
    kappa: &Matrix2<f64>,
    proj: &ProjectorMatrices,
    alpha: f64,
    beta: f64,
) -> Result<ElementMatrices> {
    let method = Method::Vem { alpha, beta };
    method.validate()?;
    let (kc, mc) = consistency_matrices(poly, kappa, proj);
    let r = &proj.r;
    let sa = dofi_dofi_stab(poly, StabMode::Stiffness, alpha);
    let sb = dofi_dofi_stab(poly, StabMode::Mass, beta);
    Ok(ElementMatrices {
        k: symmetrize(kc + r.transpose() * sa * r),
        m: symmetrize(mc + r.transpose() * sb * r),
        method,
    })
}

fn check_psd(k: &DMatrix<f64>) -> Result<()> {
    let ev = SymmetricEigen::new(k.clone()).eigenvalues;
    let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if ev.min() < -1e-10 * scale {
        return Err(Error::Numerical(format!(
            "element stiffness has negative eigenvalue {:e}",
            ev.min()
        )));
    }
    Ok(())
}

fn rb_stiffness(
    poly: &Polygon,
    kappa: &Matrix2<f64>,
    ctx: &OnlineElementCtx,
    proj: &ProjectorMatrices,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if ctx.map.n() != proj.n() || poly.n_vertices() != proj.n() {
        return Err(Error::Dimension("element context does not match the polygon".into()));
    }
    let (kc, mc) = consistency_matrices(poly, kappa, proj);
    let r = &proj.r;
    let k = symmetrize(kc + r.transpose() * &ctx.psi * r);
    check_psd(&k)?;
    Ok((k, mc))
}

/// Stabilization-free reduced-basis element.
pub fn element_rbvem(
    poly: &Polygon,
    kappa: &Matrix2<f64>,
    db: &OfflineDb,
    ctx: &OnlineElementCtx,
    proj: &ProjectorMatrices,
) -> Result<ElementMatrices> {
    let (k, mc) = rb_stiffness(poly, kappa, ctx, proj)?;
    let r = &proj.r;
    let cross = r.transpose() * ctx.phi_tilde(db, &proj.fan_nodal_values())?;
    let m = symmetrize(mc + r.transpose() * &ctx.phi * r + &cross + cross.transpose());
    Ok(ElementMatrices {
        k,
        m,
        method: Method::RbVem,
    })
}

/// Classical VEM forms with the reduced-basis term as stabilizer.
pub fn element_rbstab(
    poly: &Polygon,
    kappa: &Matrix2<f64>,
    ctx: &OnlineElementCtx,
    proj: &ProjectorMatrices,
    chi: u8,
) -> Result<ElementMatrices> {
    let method = Method::RbStab { chi };
    method.validate()?;
    let (k, mc) = rb_stiffness(poly, kappa, ctx, proj)?;
    let r = &proj.r;
    let m = if chi == 1 {
        symmetrize(mc + r.transpose() * &ctx.phi * r)
    } else {
        mc
    };
    Ok(ElementMatrices { k, m, method })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoadMode {
    /// `(f, Π∇e_i)_E`
    Projected,
    /// `(f, φ_i)_E` against the reduced-basis functions themselves.
    ExactRb,
}

/// Reduced-basis functions of one element on its pulled-back fine mesh.
#[derive(Clone, Debug)]
pub struct PulledBack {
    /// physical vertices of each fine triangle
    pub triangles: Vec<[Point2; 3]>,
    pub connectivity: Vec<[usize; 3]>,
    /// `φ̂_i^rb` nodal vectors
    pub basis: Vec<Vec<f64>>,
}

impl PulledBack {
    pub fn new(tri: &RefTriangulation, db: &OfflineDb, ctx: &OnlineElementCtx) -> Result<Self> {
        Ok(PulledBack {
            triangles: pullback_triangles(tri, &ctx.map),
            connectivity: tri.triangles().to_vec(),
            basis: reconstruct_basis_fe(db, &ctx.coeffs)?,
        })
    }

    /// Nodal values of the full local function with vertex values `u`:
    /// `Π∇u + Σ_k (R u)_k φ_k^rb`, evaluated on the fine nodes. `Π∇u` is
    /// returned separately as monomial coefficients.
    pub fn local_function(&self, proj: &ProjectorMatrices, u: &[f64]) -> (Vec<f64>, [f64; 3]) {
        let u = DVector::from_column_slice(u);
        let ru = &proj.r * &u;
        let pu = &proj.pin_poly * &u;
        let n_nodes = self.basis.first().map_or(0, Vec::len);
        let mut w = vec![0.0; n_nodes];
        for (k, b) in self.basis.iter().enumerate() {
            for (x, y) in w.iter_mut().zip(b) {
                *x += ru[k] * y;
            }
        }
        (w, [pu[0], pu[1], pu[2]])
    }
}

pub fn pullback_triangles(tri: &RefTriangulation, map: &ElementMap) -> Vec<[Point2; 3]> {
    tri.triangles()
        .iter()
        .zip(tri.sector_of_triangle())
        .map(|(t, &s)| t.map(|i| map.to_physical(s, tri.nodes()[i])))
        .collect()
}

pub fn element_load(
    poly: &Polygon,
    f: &dyn Fn(Point2) -> f64,
    proj: &ProjectorMatrices,
    mode: LoadMode,
    rb: Option<&PulledBack>,
) -> Result<Vec<f64>> {
    let n = proj.n();
    let mut load = vec![0.0; n];
    for t in poly.fan_triangles() {
        for (p, _, w) in DEGREE4.map(t) {
            let fv = f(p);
            if !fv.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite source value at ({}, {})",
                    p.x, p.y
                )));
            }
            for (j, l) in load.iter_mut().enumerate() {
                *l += w * fv * proj.eval(j, p);
            }
        }
    }
    if mode == LoadMode::Projected {
        return Ok(load);
    }
    let rb = rb.ok_or_else(|| Error::Config("exact reduced-basis load needs the pulled-back basis".into()))?;
    // (f, φ_k^rb) on the fine mesh, then φ_j = Π∇e_j + Σ_k R_kj φ_k^rb
    let mut fk = vec![0.0; n];
    for (t, conn) in rb.triangles.iter().zip(&rb.connectivity) {
        for (p, l, w) in DEGREE5.map(*t) {
            let fv = f(p);
            if !fv.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite source value at ({}, {})",
                    p.x, p.y
                )));
            }
            for (k, b) in rb.basis.iter().enumerate() {
                let v = l[0] * b[conn[0]] + l[1] * b[conn[1]] + l[2] * b[conn[2]];
                fk[k] += w * fv * v;
            }
        }
    }
    for (j, lj) in load.iter_mut().enumerate() {
        *lj += (0..n).map(|k| proj.r[(k, j)] * fk[k]).sum::<f64>();
    }
    Ok(load)
}
