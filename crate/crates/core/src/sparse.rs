//! Symmetric sparse matrices stored as the lower triangle in compressed rows.

use std::fmt::Write as _;

use crate::scalar::Real;

/// Lower-triangular CSR storage of a symmetric matrix. Column indices are
/// sorted within each row and every row ends at its diagonal when present.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric<T> {
    order: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

/// Accumulates `(row, col, value)` entries of a symmetric matrix. Entries
/// above the diagonal are mirrored into the lower triangle.
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    order: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Real> TripletBuilder<T> {
    pub fn new(order: usize) -> Self {
        Self { order, entries: Vec::new() }
    }

    pub fn with_capacity(order: usize, cap: usize) -> Self {
        Self { order, entries: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.order && col < self.order);
        let (r, c) = if col > row { (col, row) } else { (row, col) };
        self.entries.push((r, c, value));
    }

    pub fn extend(&mut self, other: TripletBuilder<T>) {
        self.entries.extend(other.entries);
    }

    /// Sorts by `(row, col)` (stable, so duplicate sums are deterministic) and sums duplicates.
    pub fn build(mut self) -> SparseSymmetric<T> {
        self.entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; self.order + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.order {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSymmetric { order: self.order, row_ptr, cols, vals }
    }
}

impl<T: Real> SparseSymmetric<T> {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nnz_lower(&self) -> usize {
        self.vals.len()
    }

    /// `(col, value)` pairs of the lower-triangular part of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.order)
            .map(|i| self.row(i).find(|&(c, _)| c == i).map_or(T::zero(), |(_, v)| v))
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (r, c) = if j > i { (j, i) } else { (i, j) };
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => T::zero(),
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.order];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.order);
        y.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..self.order {
            let mut acc = T::zero();
            for (j, a) in self.row(i) {
                acc += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
            y[i] += acc;
        }
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).map(|(&a, &b)| a * b).sum()
    }

    /// Row-major dense copy of the full symmetric matrix.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.order]; self.order];
        for i in 0..self.order {
            for (j, v) in self.row(i) {
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        d
    }

    /// Same pattern with every value multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Neighbours of each row in the full symmetric pattern, diagonal excluded.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.order];
        for i in 0..self.order {
            for (j, _) in self.row(i) {
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        adj
    }

    /// Coordinate text, one `row col value` line per stored lower entry (0-based).
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# order {} lower-nnz {}", self.order, self.nnz_lower());
        for i in 0..self.order {
            for (j, v) in self.row(i) {
                let _ = writeln!(out, "{i} {j} {:e}", v.as_f64());
            }
        }
        out
    }

    /// Dense input, lower triangle kept (entries exactly zero are skipped).
    pub fn from_dense(a: &[Vec<T>]) -> Self {
        let n = a.len();
        let mut b = TripletBuilder::new(n);
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate().take(i + 1) {
                if v != T::zero() {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n);
        (0..n).for_each(|i| b.push(i, i, T::one()));
        b.build()
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let mut b = TripletBuilder::new(d.len());
        d.iter().enumerate().for_each(|(i, &v)| b.push(i, i, v));
        b.build()
    }
}
