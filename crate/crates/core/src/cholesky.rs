//! Envelope (skyline) Cholesky factorization `P A P^T = L L^T` of a sparse
//! symmetric positive definite matrix, with a reverse Cuthill-McKee ordering
//! to keep the profile narrow.

use std::collections::VecDeque;

use thiserror::Error;

use crate::scalar::Real;
use crate::sparse::SparseSymmetric;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CholeskyError {
    #[error("matrix is not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },
}

/// Reverse Cuthill-McKee permutation: `perm[new] = old`. Each connected
/// component starts from a pseudo-peripheral node.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, mask: &[bool]| -> (Vec<usize>, usize) {
        // Returns the last level and the eccentricity of `start`.
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::from([start]);
        dist[start] = 0;
        let mut ecc = 0;
        while let Some(u) = queue.pop_front() {
            ecc = ecc.max(dist[u]);
            for &v in &adj[u] {
                if !mask[v] && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let last: Vec<usize> = (0..n).filter(|&v| dist[v] == ecc).collect();
        (last, ecc)
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // Pseudo-peripheral node search (George-Liu).
        let mut start = seed;
        let (mut last, mut ecc) = bfs_levels(start, &visited);
        loop {
            let candidate = *last.iter().min_by_key(|&&v| degree[v]).expect("non-empty level");
            let (next_last, next_ecc) = bfs_levels(candidate, &visited);
            if next_ecc > ecc {
                start = candidate;
                last = next_last;
                ecc = next_ecc;
            } else {
                break;
            }
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            next.sort_by_key(|&v| (degree[v], v));
            for v in next {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Profile of `A` under a permutation: first stored column per row.
fn envelope_starts<T: Real>(a: &SparseSymmetric<T>, perm: &[usize], inv: &[usize]) -> Vec<usize> {
    let n = a.order();
    let mut first: Vec<usize> = (0..n).collect();
    for old_i in 0..n {
        for (old_j, _) in a.row(old_i) {
            let (i, j) = (inv[old_i], inv[old_j]);
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            first[r] = first[r].min(c);
        }
    }
    debug_assert_eq!(perm.len(), n);
    first
}

/// Factor of a sparse symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SkylineCholesky<T> {
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SkylineCholesky<T> {
    pub fn factor(a: &SparseSymmetric<T>) -> Result<Self, CholeskyError> {
        let n = a.order();
        let perm = reverse_cuthill_mckee(&a.adjacency());
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let first = envelope_starts(a, &perm, &inv);
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut values = vec![T::zero(); start[n]];
        for old_i in 0..n {
            for (old_j, v) in a.row(old_i) {
                let (i, j) = (inv[old_i], inv[old_j]);
                let (r, c) = if i >= j { (i, j) } else { (j, i) };
                values[start[r] + (c - first[r])] = v;
            }
        }

        // Row-oriented Crout: L[i][j] = (A[i][j] - sum_k L[i][k] L[j][k]) / L[j][j].
        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = start[j];
                let mut acc = values[row_i + (j - fi)];
                for k in lo..j {
                    acc -= values[row_i + (k - fi)] * values[row_j + (k - fj)];
                }
                values[row_i + (j - fi)] = acc / values[row_j + (j - fj)];
            }
            let mut diag = values[row_i + (i - fi)];
            for k in fi..i {
                let l = values[row_i + (k - fi)];
                diag -= l * l;
            }
            if !(diag > T::zero()) {
                return Err(CholeskyError::NotPositiveDefinite { row: perm[i], pivot: diag.as_f64() });
            }
            values[row_i + (i - fi)] = diag.sqrt();
        }
        Ok(Self { perm, inv, first, start, values })
    }

    pub fn order(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries of the factor.
    pub fn profile_size(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> T {
        self.values[self.start[i] + (j - self.first[i])]
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.order();
        assert_eq!(b.len(), n);
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        // L y = Pb
        for i in 0..n {
            let fi = self.first[i];
            let mut acc = y[i];
            for k in fi..i {
                acc -= self.l(i, k) * y[k];
            }
            y[i] = acc / self.l(i, i);
        }
        // L^T z = y, column sweep.
        for i in (0..n).rev() {
            y[i] /= self.l(i, i);
            let yi = y[i];
            let fi = self.first[i];
            for k in fi..i {
                y[k] -= self.l(i, k) * yi;
            }
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        debug_assert_eq!(self.inv.len(), n);
        x
    }

    /// `log det A`.
    pub fn log_det(&self) -> T {
        (0..self.order()).map(|i| self.l(i, i).ln()).sum::<T>() * T::lit(2.0)
    }
}
