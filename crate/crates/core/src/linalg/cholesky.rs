//! Envelope (skyline) Cholesky factorization with reverse Cuthill-McKee
//! ordering. Adequate for the 2D meshes of this crate, whose RCM profile
//! grows like n^{3/2}.

use std::collections::VecDeque;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// `P A P^T = L L^T` with `L` stored row-wise over its envelope.
#[derive(Clone, Debug)]
pub struct SparseCholesky {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// first column of each row's envelope
    first: Vec<usize>,
    /// start offset of each row in `values`; the row ends with its diagonal
    start: Vec<usize>,
    values: Vec<f64>,
}

impl SparseCholesky {
    /// Factors a symmetric positive definite matrix. Only the lower triangle
    /// of `a` is read.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix is not square",
                a.nrows(),
                a.ncols()
            )));
        }
        let perm = rcm_ordering(a);
        Self::factor_with_ordering(a, perm)
    }

    pub fn factor_with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // envelope of the permuted lower triangle
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, _) in a.row(old_i) {
                let j = inv[old_j];
                if j < i {
                    first[i] = first[i].min(j);
                } else if i < j {
                    first[j] = first[j].min(i);
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for i in 0..n {
            start.push(total);
            total += i - first[i] + 1;
        }
        start.push(total);
        let mut values = vec![0.0; total];
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, v) in a.row(old_i) {
                let j = inv[old_j];
                if j <= i {
                    values[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (done, row_i) = values.split_at_mut(start[i]);
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = &done[start[j]..start[j + 1]];
                let mut s = row_i[j - fi];
                for k in lo..j {
                    s -= row_i[k - fi] * row_j[k - fj];
                }
                row_i[j - fi] = s / row_j[j - fj];
            }
            let s = row_i[i - fi] - row_i_dot(&row_i[..i - fi]);
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::NotPositiveDefinite { row: perm[i], pivot: s });
            }
            row_i[i - fi] = s.sqrt();
        }
        Ok(SparseCholesky {
            n,
            perm,
            first,
            start,
            values,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        // L^T x = y, column-oriented over the rows of L
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.values[self.start[i + 1] - 1].ln()).sum()
    }
}

fn row_i_dot(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Reverse Cuthill-McKee ordering of the symmetric pattern of `a`;
/// returns `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let root = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(start: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let (levels, last) = bfs_levels(root, adj);
        let far = last.iter().copied().min_by_key(|&v| (degree[v], v)).unwrap_or(root);
        if levels <= ecc {
            break;
        }
        ecc = levels;
        root = far;
    }
    root
}

/// Number of BFS levels from `root` and the nodes of the last level.
fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let mut dist = std::collections::HashMap::new();
    dist.insert(root, 0usize);
    let mut frontier = vec![root];
    let mut levels = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in &adj[v] {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                    e.insert(levels + 1);
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return (levels, frontier);
        }
        levels += 1;
        frontier = next;
    }
}

#[cfg(test)]
mod tests {
    use super::super::sparse::TripletBuilder;
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_2d(m: usize) -> CsrMatrix {
        let n = m * m;
        let mut t = TripletBuilder::new(n, n);
        for j in 0..m {
            for i in 0..m {
                let k = j * m + i;
                t.push(k, k, 4.0);
                if i > 0 {
                    t.push(k, k - 1, -1.0);
                }
                if i + 1 < m {
                    t.push(k, k + 1, -1.0);
                }
                if j > 0 {
                    t.push(k, k - m, -1.0);
                }
                if j + 1 < m {
                    t.push(k, k + m, -1.0);
                }
            }
        }
        t.build()
    }

    #[test]
    fn solves_grid_laplacian() {
        let a = laplacian_2d(20);
        let f = SparseCholesky::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..400).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = f.solve(&b);
        let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        // RCM profile is much smaller than the dense lower triangle
        assert!(f.envelope_size() < 400 * 401 / 8);
    }

    #[test]
    fn matches_dense_cholesky() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 30;
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &b * b.transpose() + DMatrix::identity(n, n) * 0.5;
        let s = CsrMatrix::from_dense(&a, 0.0);
        let f = SparseCholesky::factor(&s).unwrap();
        let dense = a.clone().cholesky().unwrap();
        let logdet: f64 = dense.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        assert!((f.log_det() - logdet).abs() < 1e-10);
        let rhs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x = f.solve(&rhs);
        let r = s.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&rhs) {
            assert!((ri - bi).abs() < 1e-9);
        }
    }

    #[test]
    fn indefinite_rejected() {
        let a = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]), 0.0);
        assert!(matches!(
            SparseCholesky::factor(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rcm_is_permutation() {
        let a = laplacian_2d(7);
        let mut p = rcm_ordering(&a);
        p.sort_unstable();
        assert_eq!(p, (0..49).collect::<Vec<_>>());
        // disconnected pattern
        let d = CsrMatrix::identity(5);
        assert_eq!(rcm_ordering(&d).len(), 5);
    }
}
