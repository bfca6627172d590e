//! Online reduced-basis stage: per-element M x M reduced solves and the
//! exact element forms of the reduced basis functions, evaluated from bricks.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};
use crate::polymesh::{ElementMap, Polygon};
use crate::rb_offline::OfflineDb;

/// Bricks contracted with the coefficients of one element. `txa` holds the
/// load bricks with the arguments swapped, `form(Θ̂_j', ξ_a)`.
struct Combined {
    axx: DMatrix<f64>,
    axt: DMatrix<f64>,
    txa: DMatrix<f64>,
    att: DMatrix<f64>,
}

impl Combined {
    fn zeros(n: usize, nm: usize) -> Self {
        Combined {
            axx: DMatrix::zeros(nm, nm),
            axt: DMatrix::zeros(nm, n),
            txa: DMatrix::zeros(nm, n),
            att: DMatrix::zeros(n, n),
        }
    }
}

fn acc(x: &mut DMatrix<f64>, t: f64, y: &DMatrix<f64>) {
    x.zip_apply(y, |a, b| *a += t * b);
}

/// `S^4` is antisymmetric, so swapping the arguments of its form flips sign.
const SWAP_SIGN: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

fn combine_stiffness(db: &OfflineDb, theta: &[[f64; 4]]) -> Combined {
    let b = &db.bricks;
    let mut c = Combined::zeros(db.n, db.n * db.m);
    for (s, th) in theta.iter().enumerate() {
        for (nu, &t) in th.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            acc(&mut c.axx, t, &b.axx[s * 4 + nu]);
            acc(&mut c.axt, t, &b.axt[s * 4 + nu]);
            acc(&mut c.txa, t * SWAP_SIGN[nu], &b.axt[s * 4 + nu]);
            acc(&mut c.att, t, &b.att[s * 4 + nu]);
        }
    }
    c
}

fn combine_mass(db: &OfflineDb, gamma: &[f64]) -> Combined {
    let b = &db.bricks;
    let mut c = Combined::zeros(db.n, db.n * db.m);
    for (s, &g) in gamma.iter().enumerate() {
        acc(&mut c.axx, g, &b.mxx[s]);
        acc(&mut c.axt, g, &b.mxt[s]);
        acc(&mut c.att, g, &b.mtt[s]);
    }
    c.txa.copy_from(&c.axt);
    c
}

fn check_theta(db: &OfflineDb, theta: &[[f64; 4]]) -> Result<()> {
    db.check_n(theta.len())
}

fn solve_block(a: DMatrix<f64>, f: DVector<f64>, j: usize) -> Result<Vec<f64>> {
    let x = if (&a - a.transpose()).abs().max() <= 1e-14 * a.abs().max() {
        a.clone().cholesky().map(|c| c.solve(&f))
    } else {
        None
    };
    let x = match x {
        Some(x) => x,
        None => a
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::SingularReducedSystem(format!("boundary index {j}")))?,
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularReducedSystem(format!(
            "non-finite solution for index {j}"
        )));
    }
    Ok(x.as_slice().to_vec())
}

fn reduced_system(db: &OfflineDb, comb: &Combined, j: usize) -> (DMatrix<f64>, DVector<f64>) {
    let m = db.m;
    // row ℓ' tests with ξ_j^ℓ', column ℓ is the trial mode
    let a = comb.axx.view((j * m, j * m), (m, m)).transpose();
    let f = -comb.txa.view((j * m, j), (m, 1)).column(0).into_owned();
    (a, f)
}

/// Coefficients `c[ℓ]` of the reduced correction for boundary index `j`.
/// With no modes the correction is empty.
pub fn solve_reduced(db: &OfflineDb, theta: &[[f64; 4]], j: usize) -> Result<Vec<f64>> {
    check_theta(db, theta)?;
    if j >= db.n {
        return Err(Error::Dimension(format!("boundary index {j} for N = {}", db.n)));
    }
    if db.m == 0 {
        return Ok(Vec::new());
    }
    let (a, f) = reduced_system(db, &combine_stiffness(db, theta), j);
    solve_block(a, f, j)
}

fn solve_all(db: &OfflineDb, comb: &Combined) -> Result<Vec<Vec<f64>>> {
    (0..db.n)
        .map(|j| {
            if db.m == 0 {
                return Ok(Vec::new());
            }
            let (a, f) = reduced_system(db, comb, j);
            solve_block(a, f, j)
        })
        .collect()
}

fn flat(db: &OfflineDb, c: &[Vec<f64>]) -> Result<Vec<DVector<f64>>> {
    if c.len() != db.n || c.iter().any(|ci| ci.len() != db.m) {
        return Err(Error::Dimension(format!("coefficients must be {} x {}", db.n, db.m)));
    }
    Ok(c.iter().map(|ci| DVector::from_column_slice(ci)).collect())
}

/// `form(φ_i, φ_j)` for `φ_i = Θ̂_i + Σ_ℓ c_i^ℓ ξ_i^ℓ`, symmetrized.
fn expand(db: &OfflineDb, form: &Combined, c: &[DVector<f64>]) -> DMatrix<f64> {
    let (n, m) = (db.n, db.m);
    let mut out = form.att.clone();
    if m > 0 {
        for i in 0..n {
            for j in 0..n {
                let xx = form.axx.view((i * m, j * m), (m, m));
                out[(i, j)] += c[i].dot(&form.axt.view((i * m, j), (m, 1)).column(0))
                    + c[j].dot(&form.txa.view((j * m, i), (m, 1)).column(0))
                    + c[i].dot(&(xx * &c[j]));
            }
        }
    }
    (&out + out.transpose()) * 0.5
}

/// `Ψ_ij = a^E(φ_i^rb, φ_j^rb)`, symmetrized.
pub fn compute_psi(db: &OfflineDb, theta: &[[f64; 4]], c: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    check_theta(db, theta)?;
    let c = flat(db, c)?;
    Ok(expand(db, &combine_stiffness(db, theta), &c))
}

/// `Φ_ij = b^E(φ_i^rb, φ_j^rb)`, symmetrized.
pub fn compute_phi(db: &OfflineDb, gamma: &[f64], c: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    db.check_n(gamma.len())?;
    let c = flat(db, c)?;
    Ok(expand(db, &combine_mass(db, gamma), &c))
}

/// `Φ̃_ij = b^E(φ_i^rb, q_j)` for sector-wise linear `q_j` given by its values
/// at the center followed by the N vertices: `q_nodal` is (N+1) x ncols.
pub fn compute_phi_tilde(
    db: &OfflineDb,
    gamma: &[f64],
    c: &[Vec<f64>],
    q_nodal: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    db.check_n(gamma.len())?;
    let c = flat(db, c)?;
    if q_nodal.nrows() != db.n + 1 {
        return Err(Error::Dimension(format!(
            "nodal values need {} rows, got {}",
            db.n + 1,
            q_nodal.nrows()
        )));
    }
    Ok(phi_tilde_from(db, gamma, &c, q_nodal))
}

fn phi_tilde_from(db: &OfflineDb, gamma: &[f64], c: &[DVector<f64>], q: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (db.n, db.m);
    let b = &db.bricks;
    // w(k, i) = Σ_s γ_s [FanT(k; i) + Σ_ℓ c_i^ℓ FanX(k; i, ℓ)]
    let mut w = DMatrix::zeros(n + 1, n);
    for (s, &g) in gamma.iter().enumerate() {
        acc(&mut w, g, &b.fan_t[s]);
        if m > 0 {
            for i in 0..n {
                let fx = b.fan_x[s].view((0, i * m), (n + 1, m));
                let col = fx * &c[i];
                w.column_mut(i).axpy(g, &col, 1.0);
            }
        }
    }
    w.transpose() * q
}

/// Nodal vectors `Θ̂_i + Σ_ℓ c[i][ℓ] ξ_i^ℓ` on the reference triangulation.
pub fn reconstruct_basis_fe(db: &OfflineDb, c: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    flat(db, c)?;
    Ok((0..db.n)
        .map(|i| {
            let mut v = db.liftings[i].clone();
            for (l, ci) in c[i].iter().enumerate() {
                for (x, y) in v.iter_mut().zip(&db.rb.modes[i][l]) {
                    *x += ci * y;
                }
            }
            v
        })
        .collect())
}

/// Reduced data of one mesh element.
#[derive(Clone, Debug)]
pub struct OnlineElementCtx {
    pub map: ElementMap,
    /// `[j][ℓ]`
    pub coeffs: Vec<Vec<f64>>,
    pub psi: DMatrix<f64>,
    pub phi: DMatrix<f64>,
}

impl OnlineElementCtx {
    pub fn new(db: &OfflineDb, poly: &Polygon, kappa: &Matrix2<f64>) -> Result<Self> {
        let map = ElementMap::new(poly, kappa)?;
        Self::from_map(db, map)
    }

    pub fn from_map(db: &OfflineDb, map: ElementMap) -> Result<Self> {
        db.check_n(map.n())?;
        let stiff = combine_stiffness(db, map.theta());
        let coeffs = solve_all(db, &stiff)?;
        let c = flat(db, &coeffs)?;
        let psi = expand(db, &stiff, &c);
        let phi = expand(db, &combine_mass(db, map.gamma()), &c);
        if psi.iter().chain(phi.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite reduced element forms".into()));
        }
        Ok(OnlineElementCtx { map, coeffs, psi, phi })
    }

    pub fn phi_tilde(&self, db: &OfflineDb, q_nodal: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        compute_phi_tilde(db, self.map.gamma(), &self.coeffs, q_nodal)
    }
}
