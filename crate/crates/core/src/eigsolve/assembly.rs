use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SparseCholesky, TripletBuilder};
use crate::polymesh::{Point2, PolyMesh, DELTA_REGION};
use crate::rb_offline::{DbStore, OfflineConfig, OfflineDb};
use crate::rb_online::OnlineElementCtx;
use crate::reffem::RefTriangulation;
use crate::vem_core::{
    element_load, element_rbstab, element_rbvem, element_vem, pi_nabla_matrices, ElementMatrices, LoadMode, Method,
    ProjectorMatrices, PulledBack,
};

use super::gevp::{solve_gevp, Spectrum};

/// Constant diffusion tensor per region tag.
#[derive(Clone, Debug, PartialEq)]
pub struct Diffusivity {
    pub default: Matrix2<f64>,
    pub regions: BTreeMap<i32, Matrix2<f64>>,
}

impl Diffusivity {
    pub fn identity() -> Self {
        Diffusivity {
            default: Matrix2::identity(),
            regions: BTreeMap::new(),
        }
    }

    /// `δ I` on cells tagged with the contrast region, `I` elsewhere.
    pub fn contrast(delta: f64) -> Self {
        let mut d = Self::identity();
        d.regions.insert(DELTA_REGION, Matrix2::identity() * delta);
        d
    }

    pub fn for_region(&self, region: i32) -> Matrix2<f64> {
        self.regions.get(&region).copied().unwrap_or(self.default)
    }
}

impl Default for Diffusivity {
    fn default() -> Self {
        Self::identity()
    }
}

struct RbEntry {
    db: OfflineDb,
    tri: OnceLock<RefTriangulation>,
}

/// Offline databases indexed by vertex count.
#[derive(Default)]
pub struct RbLibrary {
    entries: BTreeMap<usize, RbEntry>,
}

impl RbLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, db: OfflineDb) {
        self.entries.insert(
            db.n,
            RbEntry {
                db,
                tri: OnceLock::new(),
            },
        );
    }

    /// Databases for every vertex count in `ns`, read from or added to `store`.
    pub fn from_store(store: &DbStore, ns: impl IntoIterator<Item = usize>, template: &OfflineConfig) -> Result<Self> {
        let mut lib = Self::new();
        for n in ns {
            if lib.entries.contains_key(&n) {
                continue;
            }
            let cfg = OfflineConfig { n, ..template.clone() };
            lib.insert(store.get_or_build(&cfg)?);
        }
        Ok(lib)
    }

    pub fn get(&self, n: usize) -> Result<&OfflineDb> {
        self.entries.get(&n).map(|e| &e.db).ok_or(Error::MissingOfflineDb(n))
    }

    pub fn triangulation(&self, n: usize) -> Result<&RefTriangulation> {
        let e = self.entries.get(&n).ok_or(Error::MissingOfflineDb(n))?;
        if let Some(t) = e.tri.get() {
            return Ok(t);
        }
        let t = e.db.triangulation()?;
        Ok(e.tri.get_or_init(|| t))
    }

    pub fn vertex_counts(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    /// Library with every database cut to its first `m` modes.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        let mut lib = Self::new();
        for e in self.entries.values() {
            lib.insert(e.db.truncate(m.min(e.db.m))?);
        }
        Ok(lib)
    }
}

/// Per-element data kept after assembly for loads and error evaluation.
#[derive(Clone, Debug)]
pub struct ElementData {
    pub kappa: Matrix2<f64>,
    pub proj: ProjectorMatrices,
    pub ctx: Option<OnlineElementCtx>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Assembled global pencil with one dof per mesh vertex.
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub boundary: Vec<bool>,
    pub method: Method,
    pub elements: Vec<ElementData>,
}

impl GlobalSystem {
    pub fn n_dofs(&self) -> usize {
        self.k.nrows()
    }
}

pub fn element_matrices(
    mesh: &PolyMesh,
    c: usize,
    method: Method,
    kappa: &Matrix2<f64>,
    rb: Option<&RbLibrary>,
) -> Result<(ElementMatrices, ElementData)> {
    let poly = mesh.polygon(c);
    let proj = pi_nabla_matrices(poly)?;
    let (mats, ctx) = match method {
        Method::Vem { alpha, beta } => (element_vem(poly, kappa, &proj, alpha, beta)?, None),
        Method::RbVem | Method::RbStab { .. } => {
            let lib = rb.ok_or(Error::MissingOfflineDb(poly.n_vertices()))?;
            let db = lib.get(poly.n_vertices())?;
            let ctx = OnlineElementCtx::new(db, poly, kappa)?;
            let mats = match method {
                Method::RbStab { chi } => element_rbstab(poly, kappa, &ctx, &proj, chi)?,
                _ => element_rbvem(poly, kappa, db, &ctx, &proj)?,
            };
            (mats, Some(ctx))
        }
    };
    Ok((
        mats,
        ElementData {
            kappa: *kappa,
            proj,
            ctx,
        },
    ))
}

pub fn assemble_global(
    mesh: &PolyMesh,
    method: Method,
    diffusivity: &Diffusivity,
    rb: Option<&RbLibrary>,
) -> Result<GlobalSystem> {
    method.validate()?;
    let n = mesh.n_points();
    let nnz_guess: usize = mesh.cells().iter().map(|c| c.len() * c.len()).sum();
    let mut k = TripletBuilder::with_capacity(n, n, nnz_guess);
    let mut m = TripletBuilder::with_capacity(n, n, nnz_guess);
    let mut elements = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let kappa = diffusivity.for_region(mesh.region(c));
        let (mats, data) = element_matrices(mesh, c, method, &kappa, rb).map_err(|e| e.in_cell(c))?;
        k.add_block(mesh.cell(c), &mats.k);
        m.add_block(mesh.cell(c), &mats.m);
        elements.push(data);
    }
    Ok(GlobalSystem {
        k: k.build(),
        m: m.build(),
        boundary: mesh.boundary_vertex().to_vec(),
        method,
        elements,
    })
}

/// Global load vector.
pub fn assemble_load(
    mesh: &PolyMesh,
    sys: &GlobalSystem,
    f: &dyn Fn(Point2) -> f64,
    mode: LoadMode,
    rb: Option<&RbLibrary>,
) -> Result<Vec<f64>> {
    let mut load = vec![0.0; mesh.n_points()];
    for (c, data) in sys.elements.iter().enumerate() {
        let poly = mesh.polygon(c);
        let pulled = match (mode, &data.ctx) {
            (LoadMode::ExactRb, Some(ctx)) => {
                let lib = rb.ok_or(Error::MissingOfflineDb(poly.n_vertices()))?;
                let n = poly.n_vertices();
                Some(PulledBack::new(lib.triangulation(n)?, lib.get(n)?, ctx).map_err(|e| e.in_cell(c))?)
            }
            _ => None,
        };
        let mode = if pulled.is_some() { mode } else { LoadMode::Projected };
        let fl = element_load(poly, f, &data.proj, mode, pulled.as_ref()).map_err(|e| e.in_cell(c))?;
        for (&g, v) in mesh.cell(c).iter().zip(fl) {
            load[g] += v;
        }
    }
    Ok(load)
}

/// Pencil after boundary conditions, with the map back to global dofs.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    /// global dof of each reduced row
    pub dofs: Vec<usize>,
    pub bc: BoundaryCondition,
    pub n_global: usize,
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    /// Global vector with zeros on eliminated dofs.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_global];
        for (&g, v) in self.dofs.iter().zip(x) {
            out[g] = *v;
        }
        out
    }
}

pub fn apply_boundary_conditions(sys: &GlobalSystem, bc: BoundaryCondition) -> ReducedSystem {
    match bc {
        BoundaryCondition::Neumann => ReducedSystem {
            k: sys.k.clone(),
            m: sys.m.clone(),
            dofs: (0..sys.n_dofs()).collect(),
            bc,
            n_global: sys.n_dofs(),
        },
        BoundaryCondition::Dirichlet => {
            let keep: Vec<bool> = sys.boundary.iter().map(|b| !b).collect();
            ReducedSystem {
                k: sys.k.principal_submatrix(&keep),
                m: sys.m.principal_submatrix(&keep),
                dofs: (0..sys.n_dofs()).filter(|&i| keep[i]).collect(),
                bc,
                n_global: sys.n_dofs(),
            }
        }
    }
}

/// Shift making the Neumann stiffness definite while staying well below the
/// first nonzero eigenvalue.
pub fn neumann_shift(k: &CsrMatrix, m: &CsrMatrix) -> f64 {
    let (kd, md) = (k.diagonal(), m.diagonal());
    let ratio = kd
        .iter()
        .zip(&md)
        .filter(|(_, &mi)| mi > 0.0)
        .map(|(ki, mi)| ki / mi)
        .fold(f64::INFINITY, f64::min);
    if ratio.is_finite() {
        -1e-3 * ratio
    } else {
        -1e-3 * kd.iter().sum::<f64>() / kd.len().max(1) as f64
    }
}

/// Smallest `num_eigs` eigenpairs of the reduced pencil. Under Neumann
/// conditions the constant mode is computed and then discarded.
pub fn solve_eigenproblem(sys: &ReducedSystem, num_eigs: usize) -> Result<Spectrum> {
    if sys.dim() == 0 || num_eigs == 0 {
        return Ok(Spectrum::empty(sys.dim()));
    }
    match sys.bc {
        BoundaryCondition::Dirichlet => solve_gevp(&sys.k, &sys.m, num_eigs.min(sys.dim()), 0.0),
        BoundaryCondition::Neumann => {
            let want = (num_eigs + 1).min(sys.dim());
            let spec = solve_gevp(&sys.k, &sys.m, want, neumann_shift(&sys.k, &sys.m))?;
            let next = spec.eigenvalues.iter().copied().find(|&l| l > 1e-8).unwrap_or(1.0);
            let keep: Vec<usize> = (0..spec.len())
                .filter(|&i| spec.eigenvalues[i] >= 1e-8 * next)
                .take(num_eigs)
                .collect();
            Ok(spec.select(&keep))
        }
    }
}

/// Solves `K u = F` with `u = g` on boundary dofs (Dirichlet) or the pure
/// Neumann problem with zero-mean solution otherwise.
pub fn solve_source(k: &CsrMatrix, f: &[f64]) -> Result<Vec<f64>> {
    if f.iter().all(|v| *v == 0.0) {
        return Ok(vec![0.0; f.len()]);
    }
    let chol = SparseCholesky::factor(k)?;
    let x = chol.solve(f);
    let r: Vec<f64> = k.mul_vec(&x).iter().zip(f).map(|(a, b)| a - b).collect();
    let rel = crate::linalg::norm2(&r) / crate::linalg::norm2(f);
    if !(rel < 1e-10) {
        return Err(Error::Numerical(format!("source solve residual {rel:e}")));
    }
    Ok(x)
}

/// Dirichlet source problem on the global system: returns the full vertex
/// vector with boundary values `g`.
pub fn solve_dirichlet_source(sys: &GlobalSystem, load: &[f64], g: &dyn Fn(usize) -> f64) -> Result<Vec<f64>> {
    let red = apply_boundary_conditions(sys, BoundaryCondition::Dirichlet);
    let mut ub = vec![0.0; sys.n_dofs()];
    for (i, &b) in sys.boundary.iter().enumerate() {
        if b {
            ub[i] = g(i);
        }
    }
    let kub = sys.k.mul_vec(&ub);
    let rhs: Vec<f64> = red.dofs.iter().map(|&i| load[i] - kub[i]).collect();
    let x = if red.dim() == 0 {
        Vec::new()
    } else if rhs.iter().all(|v| *v == 0.0) {
        vec![0.0; red.dim()]
    } else {
        let chol = SparseCholesky::factor(&red.k)?;
        let x = chol.solve(&rhs);
        let r: Vec<f64> = red.k.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let rel = crate::linalg::norm2(&r) / crate::linalg::norm2(&rhs);
        if !(rel < 1e-10) {
            return Err(Error::Numerical(format!("source solve residual {rel:e}")));
        }
        x
    };
    let mut u = ub;
    for (&i, v) in red.dofs.iter().zip(x) {
        u[i] = v;
    }
    Ok(u)
}
