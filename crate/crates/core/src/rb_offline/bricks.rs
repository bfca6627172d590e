use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::reffem::{RefTriangulation, SectorBlock, SectorForms};

use super::pod::RbSpace;

/// Parameter-independent arrays. Reduced modes use the flattened index
/// `a = j * M + ℓ`; fan hats are indexed `k = 0` (center), `1..=N` (vertices).
///
/// Every brick stores `form(first index, second index)`; for stiffness
/// bricks the first argument is the trial function, on which `S^ν` acts.
#[derive(Clone, Debug, PartialEq)]
pub struct BrickDb {
    pub n: usize,
    pub m: usize,
    /// `[s * 4 + ν]`, NM x NM
    pub axx: Vec<DMatrix<f64>>,
    /// `[s * 4 + ν]`, NM x N: `â(ξ_a, Θ̂_j')`
    pub axt: Vec<DMatrix<f64>>,
    /// `[s * 4 + ν]`, N x N
    pub att: Vec<DMatrix<f64>>,
    /// `[s]`, NM x NM
    pub mxx: Vec<DMatrix<f64>>,
    pub mxt: Vec<DMatrix<f64>>,
    pub mtt: Vec<DMatrix<f64>>,
    /// `[s]`, (N+1) x NM: `(η̂_k, ξ_a)_{T̂_s}`
    pub fan_x: Vec<DMatrix<f64>>,
    /// `[s]`, (N+1) x N
    pub fan_t: Vec<DMatrix<f64>>,
}

fn csr_times_dense(a: &CsrMatrix, w: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), w.ncols());
    for c in 0..w.ncols() {
        let col = w.column(c);
        for r in 0..a.nrows() {
            let mut s = 0.0;
            for (j, v) in a.row(r) {
                s += v * col[j];
            }
            out[(r, c)] = s;
        }
    }
    out
}

pub fn precompute_bricks(
    tri: &RefTriangulation,
    forms: &SectorForms,
    rb: &RbSpace,
    liftings: &[Vec<f64>],
) -> Result<BrickDb> {
    let n = tri.n();
    let m = rb.m;
    if rb.n != n || liftings.len() != n || forms.n() != n {
        return Err(Error::Dimension(format!(
            "bricks for N = {n}: reduced space has N = {}, {} liftings",
            rb.n,
            liftings.len()
        )));
    }
    let nm = n * m;
    let hats: Vec<Vec<f64>> = (0..=n).map(|k| tri.fan_hat(k)).collect();
    let mut db = BrickDb {
        n,
        m,
        axx: Vec::with_capacity(4 * n),
        axt: Vec::with_capacity(4 * n),
        att: Vec::with_capacity(4 * n),
        mxx: Vec::with_capacity(n),
        mxt: Vec::with_capacity(n),
        mtt: Vec::with_capacity(n),
        fan_x: Vec::with_capacity(n),
        fan_t: Vec::with_capacity(n),
    };
    for s in 0..n {
        let block = SectorBlock::new(tri, forms, s);
        let ns = block.nodes.len();
        let mut w = DMatrix::zeros(ns, nm + n);
        for j in 0..n {
            for l in 0..m {
                let g = block.gather(&rb.modes[j][l]);
                w.column_mut(j * m + l).copy_from_slice(&g);
            }
            let g = block.gather(&liftings[j]);
            w.column_mut(nm + j).copy_from_slice(&g);
        }
        let wt = w.transpose();
        for nu in 0..4 {
            // q[(r, c)] = w_r^T A w_c = â(w_c, w_r)
            let q = &wt * csr_times_dense(&block.stiff[nu], &w);
            let brick = q.transpose();
            db.axx.push(brick.view((0, 0), (nm, nm)).into_owned());
            db.axt.push(brick.view((0, nm), (nm, n)).into_owned());
            db.att.push(brick.view((nm, nm), (n, n)).into_owned());
        }
        let mw = csr_times_dense(&block.mass, &w);
        let q = &wt * &mw;
        let q = (&q + q.transpose()) * 0.5;
        db.mxx.push(q.view((0, 0), (nm, nm)).into_owned());
        db.mxt.push(q.view((0, nm), (nm, n)).into_owned());
        db.mtt.push(q.view((nm, nm), (n, n)).into_owned());
        let mut e = DMatrix::zeros(ns, n + 1);
        for (k, h) in hats.iter().enumerate() {
            e.column_mut(k).copy_from_slice(&block.gather(h));
        }
        let fan = e.transpose() * &mw;
        db.fan_x.push(fan.view((0, 0), (n + 1, nm)).into_owned());
        db.fan_t.push(fan.view((0, nm), (n + 1, n)).into_owned());
    }
    Ok(db)
}

impl BrickDb {
    /// Restriction to the first `m` modes of every index.
    pub fn truncate(&self, m: usize) -> Result<BrickDb> {
        if m > self.m {
            return Err(Error::Dimension(format!("cannot truncate {} modes to {m}", self.m)));
        }
        let keep: Vec<usize> = (0..self.n).flat_map(|j| (0..m).map(move |l| j * self.m + l)).collect();
        let rows = |a: &DMatrix<f64>| a.select_rows(keep.iter());
        let cols = |a: &DMatrix<f64>| a.select_columns(keep.iter());
        let both = |a: &DMatrix<f64>| a.select_rows(keep.iter()).select_columns(keep.iter());
        Ok(BrickDb {
            n: self.n,
            m,
            axx: self.axx.iter().map(both).collect(),
            axt: self.axt.iter().map(rows).collect(),
            att: self.att.clone(),
            mxx: self.mxx.iter().map(both).collect(),
            mxt: self.mxt.iter().map(rows).collect(),
            mtt: self.mtt.clone(),
            fan_x: self.fan_x.iter().map(cols).collect(),
            fan_t: self.fan_t.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rb_offline::{compute_snapshots, pod_compress, sample_parameter_space, PodTarget};
    use crate::reffem::harmonic_liftings;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, m: usize) -> (RefTriangulation, SectorForms, RbSpace, Vec<Vec<f64>>, BrickDb) {
        let tri = RefTriangulation::new(n, 2).unwrap();
        let forms = SectorForms::assemble(&tri).unwrap();
        let lift = harmonic_liftings(&tri, &forms).unwrap();
        let samples = sample_parameter_space(n, 8, 5).unwrap();
        let snaps = compute_snapshots(&tri, &forms, &lift, &samples).unwrap();
        let rb = pod_compress(&snaps, &forms.laplacian(), PodTarget::Modes(m)).unwrap();
        let db = precompute_bricks(&tri, &forms, &rb, &lift).unwrap();
        (tri, forms, rb, lift, db)
    }

    #[test]
    fn identity_pattern_gives_orthonormal_blocks() {
        let (n, m) = (5, 3);
        let (_, _, _, _, db) = setup(n, m);
        let mut g = DMatrix::zeros(n * m, n * m);
        for s in 0..n {
            g += &db.axx[s * 4] + &db.axx[s * 4 + 1];
        }
        for j in 0..n {
            let block = g.view((j * m, j * m), (m, m));
            assert!((block - DMatrix::<f64>::identity(m, m)).abs().max() < 1e-10);
        }
    }

    #[test]
    fn symmetry_and_fan_partition() {
        let (tri, forms, _, lift, db) = setup(4, 2);
        for s in 0..4 {
            for nu in 0..3 {
                assert!((&db.axx[s * 4 + nu] - db.axx[s * 4 + nu].transpose()).abs().max() < 1e-13);
            }
            assert!((&db.axx[s * 4 + 3] + db.axx[s * 4 + 3].transpose()).abs().max() < 1e-13);
            assert!((&db.mxx[s] - db.mxx[s].transpose()).abs().max() == 0.0);
            let one = vec![1.0; tri.n_nodes()];
            for j in 0..4 {
                let total: f64 = (0..=4).map(|k| db.fan_t[s][(k, j)]).sum();
                let direct = forms.sector_mass_form(s, &lift[j], &one);
                assert!((total - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn random_entries_match_direct_integration() {
        let (n, m) = (6, 2);
        let (tri, forms, rb, lift, db) = setup(n, m);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = |a: usize| {
            if a < n * m {
                &rb.modes[a / m][a % m]
            } else {
                &lift[a - n * m]
            }
        };
        for _ in 0..20 {
            let s = rng.random_range(0..n);
            let nu = rng.random_range(0..4);
            let a = rng.random_range(0..n * m);
            let b = rng.random_range(0..n * m);
            let jt = rng.random_range(0..n);
            let k = rng.random_range(0..=n);
            assert!((db.axx[s * 4 + nu][(a, b)] - forms.sector_form(s, nu, f(a), f(b))).abs() < 1e-13);
            assert!((db.axt[s * 4 + nu][(a, jt)] - forms.sector_form(s, nu, f(a), &lift[jt])).abs() < 1e-13);
            assert!(
                (db.att[s * 4 + nu][(jt, b % n)] - forms.sector_form(s, nu, &lift[jt], &lift[b % n])).abs() < 1e-13
            );
            assert!((db.mxt[s][(a, jt)] - forms.sector_mass_form(s, f(a), &lift[jt])).abs() < 1e-14);
            assert!((db.fan_x[s][(k, a)] - forms.sector_mass_form(s, &tri.fan_hat(k), f(a))).abs() < 1e-14);
        }
    }

    #[test]
    fn truncation_keeps_leading_modes() {
        let (_, _, _, _, db) = setup(4, 3);
        let t = db.truncate(2).unwrap();
        assert_eq!(t.axx[5].shape(), (8, 8));
        assert_eq!(t.axx[5][(2, 7)], db.axx[5][(3, 10)]);
        assert_eq!(t.fan_x[1][(4, 5)], db.fan_x[1][(4, 7)]);
        assert!(db.truncate(4).is_err());
    }
}
