use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{dot, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PodTarget {
    /// Fixed number of modes per boundary index.
    Modes(usize),
    /// Smallest M retaining at least `1 - tol` of the snapshot energy.
    Energy(f64),
}

/// Per-boundary-index POD bases, orthonormal in the H¹₀ inner product.
#[derive(Clone, Debug)]
pub struct RbSpace {
    pub n: usize,
    pub m: usize,
    /// `[j][ℓ]` full nodal vectors
    pub modes: Vec<Vec<Vec<f64>>>,
    /// `[j][ℓ]` square roots of the retained Gram eigenvalues
    pub singular_values: Vec<Vec<f64>>,
    /// `[j]` all Gram eigenvalues, descending
    pub gram_eigenvalues: Vec<Vec<f64>>,
    /// Set when the snapshots carry no energy and no mode was kept.
    pub degenerate: bool,
}

impl RbSpace {
    /// Fraction of the energy of index `j` captured by its first `m` modes.
    pub fn retained_energy(&self, j: usize, m: usize) -> f64 {
        let ev = &self.gram_eigenvalues[j];
        let total: f64 = ev.iter().map(|v| v.max(0.0)).sum();
        if total == 0.0 {
            return 1.0;
        }
        ev.iter().take(m).map(|v| v.max(0.0)).sum::<f64>() / total
    }
}

/// Relative Gram eigenvalue below which a direction counts as numerically null.
const RANK_TOL: f64 = 1e-13;

/// `snapshots[ℓ][j]` compressed independently for each `j`. `h1` is the
/// stiffness matrix of the H¹₀ inner product.
pub fn pod_compress(snapshots: &[Vec<Vec<f64>>], h1: &CsrMatrix, target: PodTarget) -> Result<RbSpace> {
    let l = snapshots.len();
    if l == 0 {
        return Err(Error::Config("no snapshots to compress".into()));
    }
    let n = snapshots[0].len();
    if let PodTarget::Modes(m) = target {
        if m > l {
            return Err(Error::Config(format!("requested {m} modes from {l} snapshots")));
        }
    }
    let mut modes = Vec::with_capacity(n);
    let mut svs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut grams = Vec::with_capacity(n);
    let mut m_shared = usize::MAX;
    for j in 0..n {
        let cols: Vec<&Vec<f64>> = snapshots.iter().map(|s| &s[j]).collect();
        let kcols: Vec<Vec<f64>> = cols.iter().map(|c| h1.mul_vec(c)).collect();
        let g = DMatrix::from_fn(l, l, |a, b| 0.5 * (dot(cols[a], &kcols[b]) + dot(cols[b], &kcols[a])));
        let eig = SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..l).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let ev: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let top = ev[0].max(0.0);
        let rank = ev.iter().take_while(|&&v| v > RANK_TOL * top && v > 0.0).count();
        let want = match target {
            PodTarget::Modes(m) => m,
            PodTarget::Energy(tol) => {
                let total: f64 = ev.iter().map(|v| v.max(0.0)).sum();
                let mut acc = 0.0;
                let mut m = 0;
                while m < l && total > 0.0 && acc < (1.0 - tol) * total {
                    acc += ev[m].max(0.0);
                    m += 1;
                }
                m
            }
        };
        let keep = want.min(rank);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(keep);
        for &i in order.iter().take(keep) {
            let lam = eig.eigenvalues[i];
            let mut v = vec![0.0; cols[0].len()];
            for (c, col) in cols.iter().enumerate() {
                let w = eig.eigenvectors[(c, i)] / lam.sqrt();
                for (vi, x) in v.iter_mut().zip(col.iter()) {
                    *vi += w * x;
                }
            }
            basis.push(v);
        }
        let basis = h1_orthonormalize(basis, h1);
        m_shared = m_shared.min(basis.len());
        svs.push(ev.iter().take(basis.len()).map(|v| v.max(0.0).sqrt()).collect());
        modes.push(basis);
        grams.push(ev);
    }
    let requested = match target {
        PodTarget::Modes(m) => m,
        PodTarget::Energy(_) => m_shared,
    };
    if m_shared < requested {
        log::warn!("snapshot rank limits the reduced dimension to {m_shared} (requested {requested})");
    }
    for (b, s) in modes.iter_mut().zip(svs.iter_mut()) {
        b.truncate(m_shared);
        s.truncate(m_shared);
    }
    Ok(RbSpace {
        n,
        m: m_shared,
        modes,
        singular_values: svs,
        gram_eigenvalues: grams,
        degenerate: m_shared == 0,
    })
}

/// Two passes of modified Gram-Schmidt in the `h1` inner product; vectors
/// that collapse are dropped.
fn h1_orthonormalize(mut basis: Vec<Vec<f64>>, h1: &CsrMatrix) -> Vec<Vec<f64>> {
    let mut out: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(basis.len());
    for v in basis.iter_mut() {
        let norm0 = dot(v, &h1.mul_vec(v)).max(0.0).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for (q, kq) in &out {
                let c = dot(kq, v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let kv = h1.mul_vec(v);
        let norm = dot(v, &kv).max(0.0).sqrt();
        if norm <= 1e-10 * norm0 {
            continue;
        }
        let q: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let kq: Vec<f64> = kv.iter().map(|x| x / norm).collect();
        out.push((q, kq));
    }
    out.into_iter().map(|(q, _)| q).collect()
}
