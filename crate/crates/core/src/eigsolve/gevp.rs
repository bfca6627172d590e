//! Symmetric generalized eigenproblem `K x = λ M x` with `M` possibly
//! singular: shift-invert Lanczos in the `K_σ` inner product, plus a dense
//! reference path.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, CsrMatrix, SparseCholesky};

/// Eigenpairs in ascending order with `M`-orthonormal eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// `‖K x - λ M x‖_2` per pair.
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Residuals scaled by `‖K‖_∞ + |λ| ‖M‖_∞`.
    pub fn relative_residuals(&self, k: &CsrMatrix, m: &CsrMatrix) -> Vec<f64> {
        let (nk, nm) = (k.norm_inf(), m.norm_inf());
        self.eigenvalues
            .iter()
            .zip(&self.residuals)
            .map(|(l, r)| r / (nk + l.abs() * nm))
            .collect()
    }

    /// Largest `|X^T M X - I|` entry.
    pub fn orthonormality_defect(&self, m: &CsrMatrix) -> f64 {
        let k = self.len();
        let mx: Vec<Vec<f64>> = (0..k)
            .map(|j| m.mul_vec(self.eigenvectors.column(j).as_slice()))
            .collect();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for (j, mxj) in mx.iter().enumerate() {
                let g = dot(self.eigenvectors.column(i).as_slice(), mxj);
                worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    pub fn empty(dim: usize) -> Spectrum {
        Spectrum {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(dim, 0),
            residuals: Vec::new(),
        }
    }

    /// The pairs at positions `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Spectrum {
        Spectrum {
            eigenvalues: idx.iter().map(|&i| self.eigenvalues[i]).collect(),
            eigenvectors: self.eigenvectors.select_columns(idx.iter()),
            residuals: idx.iter().map(|&i| self.residuals[i]).collect(),
        }
    }

    fn from_pairs(k: &CsrMatrix, m: &CsrMatrix, mut pairs: Vec<(f64, Vec<f64>)>) -> Spectrum {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = k.nrows();
        let mut vecs = DMatrix::zeros(n, pairs.len());
        let mut vals = Vec::with_capacity(pairs.len());
        let mut res = Vec::with_capacity(pairs.len());
        for (c, (l, x)) in pairs.into_iter().enumerate() {
            let kx = k.mul_vec(&x);
            let mx = m.mul_vec(&x);
            let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - l * b).collect();
            res.push(norm2(&r));
            vals.push(l);
            vecs.column_mut(c).copy_from_slice(&x);
        }
        Spectrum {
            eigenvalues: vals,
            eigenvectors: vecs,
            residuals: res,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GevpOptions {
    /// Relative Ritz residual tolerance for shift-invert Lanczos.
    pub tol: f64,
    /// Systems up to this dimension use the dense path.
    pub dense_threshold: usize,
    pub max_krylov: usize,
    pub seed: u64,
}

impl Default for GevpOptions {
    fn default() -> Self {
        GevpOptions {
            tol: 1e-12,
            dense_threshold: 600,
            max_krylov: 600,
            seed: 0,
        }
    }
}

/// The `num_eigs` smallest finite eigenvalues above `shift`; `K - shift M`
/// must be positive definite.
pub fn solve_gevp(k: &CsrMatrix, m: &CsrMatrix, num_eigs: usize, shift: f64) -> Result<Spectrum> {
    solve_gevp_with(k, m, num_eigs, shift, &GevpOptions::default())
}

pub fn solve_gevp_with(
    k: &CsrMatrix,
    m: &CsrMatrix,
    num_eigs: usize,
    shift: f64,
    opts: &GevpOptions,
) -> Result<Spectrum> {
    check_pencil(k, m)?;
    if k.nrows() == 0 || num_eigs == 0 {
        return Ok(Spectrum::from_pairs(k, m, Vec::new()));
    }
    if k.nrows() <= opts.dense_threshold {
        solve_gevp_dense(k, m, num_eigs, shift)
    } else {
        solve_gevp_lanczos(k, m, num_eigs, shift, opts)
    }
}

fn check_pencil(k: &CsrMatrix, m: &CsrMatrix) -> Result<()> {
    if k.nrows() != k.ncols() || m.nrows() != m.ncols() || k.nrows() != m.nrows() {
        return Err(Error::Dimension(format!(
            "pencil of {}x{} and {}x{} matrices",
            k.nrows(),
            k.ncols(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Relative size below which `μ = 1/(λ - σ)` counts as an infinite eigenvalue.
const INFINITE_MU: f64 = 1e-12;

/// Dense path: `K_σ = L L^T`, eigenvalues `μ` of `L^{-1} M L^{-T}`,
/// `λ = σ + 1/μ`.
/// Row and value of the first nonpositive pivot of an unpivoted Cholesky sweep.
fn failing_pivot(mut a: DMatrix<f64>) -> (usize, f64) {
    let n = a.nrows();
    for j in 0..n {
        let d = a[(j, j)] - (0..j).map(|k| a[(j, k)] * a[(j, k)]).sum::<f64>();
        if !(d > 0.0) {
            return (j, d);
        }
        let d = d.sqrt();
        a[(j, j)] = d;
        for i in j + 1..n {
            a[(i, j)] = (a[(i, j)] - (0..j).map(|k| a[(i, k)] * a[(j, k)]).sum::<f64>()) / d;
        }
    }
    (n, f64::NAN)
}

pub fn solve_gevp_dense(k: &CsrMatrix, m: &CsrMatrix, num_eigs: usize, shift: f64) -> Result<Spectrum> {
    check_pencil(k, m)?;
    let n = k.nrows();
    if n == 0 {
        return Ok(Spectrum::from_pairs(k, m, Vec::new()));
    }
    let kd = k.to_dense();
    let md = m.to_dense();
    let ks = symmetrize(&(&kd - &md * shift));
    let Some(chol) = ks.clone().cholesky() else {
        let (row, pivot) = failing_pivot(ks);
        return Err(Error::NotPositiveDefinite { row, pivot });
    };
    let l = chol.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let c = symmetrize(&(&linv * symmetrize(&md) * linv.transpose()));
    let eig = SymmetricEigen::new(c);
    let mu_max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut order: Vec<usize> = (0..n)
        .filter(|&i| eig.eigenvalues[i] > INFINITE_MU * mu_max.max(f64::MIN_POSITIVE))
        .collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(num_eigs);
    let lt_inv = linv.transpose();
    let pairs = order
        .into_iter()
        .map(|i| {
            let mu = eig.eigenvalues[i];
            let y = eig.eigenvectors.column(i);
            // x^T K_σ x = 1, hence x^T M x = μ
            let x: DVector<f64> = &lt_inv * y / mu.sqrt();
            (shift + 1.0 / mu, x.as_slice().to_vec())
        })
        .collect();
    Ok(Spectrum::from_pairs(k, m, pairs))
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Shift-invert Lanczos on `K_σ^{-1} M`, self-adjoint in the `K_σ` inner
/// product even when `M` is singular. Full reorthogonalization against the
/// stored `z_i = K_σ v_i`.
pub fn solve_gevp_lanczos(
    k: &CsrMatrix,
    m: &CsrMatrix,
    num_eigs: usize,
    shift: f64,
    opts: &GevpOptions,
) -> Result<Spectrum> {
    check_pencil(k, m)?;
    let n = k.nrows();
    let ks = k.add_scaled(-shift, m)?;
    let chol = SparseCholesky::factor(&ks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let max_dim = opts.max_krylov.max(2 * num_eigs + 20).min(n);

    let mut vs: Vec<Vec<f64>> = Vec::new();
    let mut zs: Vec<Vec<f64>> = Vec::new();
    let mut ms: Vec<Vec<f64>> = Vec::new();

    // start vector: random, then K_σ-normalized after one application of the operator
    let r0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut w = chol.solve(&m.mul_vec(&r0));
    if dot(&w, &m.mul_vec(&r0)) <= 0.0 {
        w = r0.clone();
    }
    let mut zw = ks.mul_vec(&w);
    let mut beta = dot(&w, &zw).max(0.0).sqrt();

    let mut result: Option<(Vec<f64>, DMatrix<f64>)> = None;
    while vs.len() < max_dim {
        if !(beta > 1e-14 * (1.0 + beta)) || !beta.is_finite() {
            // invariant subspace: continue with a fresh orthogonal direction
            let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            w = r;
            for _ in 0..2 {
                kortho(&mut w, &vs, &zs);
            }
            zw = ks.mul_vec(&w);
            beta = dot(&w, &zw).max(0.0).sqrt();
            if !(beta > 0.0) {
                break;
            }
        }
        let v: Vec<f64> = w.iter().map(|x| x / beta).collect();
        let z = ks.mul_vec(&v);
        let mv = m.mul_vec(&v);
        vs.push(v);
        zs.push(z);
        ms.push(mv.clone());

        // next direction: K_σ^{-1} M v, with K_σ w = M v
        w = chol.solve(&mv);
        for _ in 0..2 {
            kortho(&mut w, &vs, &zs);
        }
        zw = ks.mul_vec(&w);
        beta = dot(&w, &zw).max(0.0).sqrt();

        let dim = vs.len();
        let check = dim >= num_eigs.min(n) && (dim % 5 == 0 || dim == max_dim || dim == n);
        if check {
            // Rayleigh-Ritz: T_ij = <Op v_j, v_i>_{K_σ} = v_i^T M v_j
            let t = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (dot(&vs[i], &ms[j]) + dot(&vs[j], &ms[i])));
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let mu_max = eig.eigenvalues[order[0]].max(f64::MIN_POSITIVE);
            let wanted: Vec<usize> = order
                .iter()
                .copied()
                .filter(|&i| eig.eigenvalues[i] > INFINITE_MU * mu_max)
                .take(num_eigs)
                .collect();
            let converged = wanted.iter().all(|&i| {
                let last = eig.eigenvectors[(dim - 1, i)];
                (beta * last).abs() <= opts.tol * eig.eigenvalues[i].abs()
            });
            let exhausted = dim == n || dim == max_dim;
            if (converged && wanted.len() == num_eigs.min(n)) || exhausted {
                if !converged && dim < n {
                    return Err(Error::NoConvergence(format!(
                        "Lanczos basis of dimension {dim} did not converge {num_eigs} eigenpairs"
                    )));
                }
                let vals: Vec<f64> = wanted.iter().map(|&i| eig.eigenvalues[i]).collect();
                let y = DMatrix::from_fn(dim, wanted.len(), |r, c| eig.eigenvectors[(r, wanted[c])]);
                result = Some((vals, y));
                break;
            }
        }
    }
    let (mus, y) = result.ok_or_else(|| Error::NoConvergence("Lanczos iteration broke down".into()))?;
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(mus.len());
    for c in 0..mus.len() {
        let mut x = vec![0.0; n];
        for (r, v) in vs.iter().enumerate() {
            let coef = y[(r, c)];
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += coef * vi;
            }
        }
        xs.push(x);
    }
    let pairs = rayleigh_ritz(k, m, xs, mus.iter().map(|mu| shift + 1.0 / mu).collect());
    Ok(Spectrum::from_pairs(k, m, pairs))
}

/// Removes the `K_σ` components of `w` along the basis (classical
/// Gram-Schmidt pass, applied twice by the caller).
fn kortho(w: &mut [f64], vs: &[Vec<f64>], zs: &[Vec<f64>]) {
    let coefs: Vec<f64> = zs.iter().map(|z| dot(z, w)).collect();
    for (v, c) in vs.iter().zip(coefs) {
        for (wi, vi) in w.iter_mut().zip(v) {
            *wi -= c * vi;
        }
    }
}

/// Projects the pencil onto the span of `xs` and re-solves, giving
/// `M`-orthonormal vectors. Falls back to plain `M`-normalization when the
/// projected mass is not definite.
fn rayleigh_ritz(k: &CsrMatrix, m: &CsrMatrix, xs: Vec<Vec<f64>>, lambdas: Vec<f64>) -> Vec<(f64, Vec<f64>)> {
    let p = xs.len();
    let kx: Vec<Vec<f64>> = xs.iter().map(|x| k.mul_vec(x)).collect();
    let mx: Vec<Vec<f64>> = xs.iter().map(|x| m.mul_vec(x)).collect();
    let kp = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&xs[i], &kx[j]) + dot(&xs[j], &kx[i])));
    let mp = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&xs[i], &mx[j]) + dot(&xs[j], &mx[i])));
    let fallback = |xs: Vec<Vec<f64>>| {
        xs.into_iter()
            .zip(&lambdas)
            .map(|(x, &l)| {
                let s = dot(&x, &m.mul_vec(&x)).sqrt();
                (l, x.iter().map(|v| v / s).collect())
            })
            .collect()
    };
    let Some(chol) = mp.clone().cholesky() else {
        return fallback(xs);
    };
    let l = chol.l();
    let Some(linv) = l.solve_lower_triangular(&DMatrix::identity(p, p)) else {
        return fallback(xs);
    };
    let c = symmetrize(&(&linv * kp * linv.transpose()));
    let eig = SymmetricEigen::new(c);
    let coef = linv.transpose() * &eig.eigenvectors;
    (0..p)
        .map(|c| {
            let mut x = vec![0.0; xs[0].len()];
            for (r, xr) in xs.iter().enumerate() {
                let a = coef[(r, c)];
                for (xi, v) in x.iter_mut().zip(xr) {
                    *xi += a * v;
                }
            }
            (eig.eigenvalues[c], x)
        })
        .collect()
}
