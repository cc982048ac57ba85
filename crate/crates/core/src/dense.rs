//! Small dense kernels: Cholesky, two independent symmetric eigensolvers
//! (Householder + implicit QL, and cyclic Jacobi) and a one-sided Jacobi SVD.
//!
//! Matrices are row-major `Vec<Vec<T>>`.

use crate::scalar::Real;

pub type Dense<T> = Vec<Vec<T>>;

pub fn zeros<T: Real>(rows: usize, cols: usize) -> Dense<T> {
    vec![vec![T::zero(); cols]; rows]
}

pub fn identity<T: Real>(n: usize) -> Dense<T> {
    let mut a = zeros(n, n);
    (0..n).for_each(|i| a[i][i] = T::one());
    a
}

pub fn transpose<T: Real>(a: &Dense<T>) -> Dense<T> {
    let (r, c) = (a.len(), a.first().map_or(0, Vec::len));
    (0..c).map(|j| (0..r).map(|i| a[i][j]).collect()).collect()
}

pub fn matmul<T: Real>(a: &Dense<T>, b: &Dense<T>) -> Dense<T> {
    let (r, k, c) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = zeros(r, c);
    for i in 0..r {
        for p in 0..k {
            let aip = a[i][p];
            if aip == T::zero() {
                continue;
            }
            for j in 0..c {
                out[i][j] += aip * b[p][j];
            }
        }
    }
    out
}

pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

/// Lower Cholesky factor `L` with `A = L L^T`, or `None` on a non-positive pivot.
pub fn cholesky<T: Real>(a: &Dense<T>) -> Option<Dense<T>> {
    let n = a.len();
    let mut l = zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L y = b` in place.
pub fn forward_subst<T: Real>(l: &Dense<T>, b: &mut [T]) {
    for i in 0..b.len() {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * b[k];
        }
        b[i] = s / l[i][i];
    }
}

/// Solves `L^T x = b` in place.
pub fn backward_subst_transposed<T: Real>(l: &Dense<T>, b: &mut [T]) {
    for i in (0..b.len()).rev() {
        let mut s = b[i];
        for k in i + 1..b.len() {
            s -= l[k][i] * b[k];
        }
        b[i] = s / l[i][i];
    }
}

/// Eigenpairs of a symmetric matrix, ascending. `vectors[j]` is the
/// unit eigenvector for `values[j]`.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

fn sorted<T: Real>(values: Vec<T>, columns_of: impl Fn(usize) -> Vec<T>) -> SymEigen<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal));
    SymEigen { values: order.iter().map(|&i| values[i]).collect(), vectors: order.iter().map(|&i| columns_of(i)).collect() }
}

/// Householder tridiagonalization followed by the implicit QL iteration.
pub fn symmetric_eigen_ql<T: Real>(a: &Dense<T>) -> SymEigen<T> {
    let n = a.len();
    if n == 0 {
        return SymEigen { values: vec![], vectors: vec![] };
    }
    let mut v = a.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e);
    sorted(d, |j| (0..n).map(|i| v[i][j]).collect())
}

fn tred2<T: Real>(v: &mut Dense<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
                v[j][i] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = T::zero();
    }
    v[n - 1][n - 1] = T::one();
    e[0] = T::zero();
}

fn tql2<T: Real>(v: &mut Dense<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (T::lit(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
}

/// Cyclic Jacobi rotations; slower than QL but an independent route,
/// accurate for small matrices.
pub fn symmetric_eigen_jacobi<T: Real>(a: &Dense<T>) -> SymEigen<T> {
    let n = a.len();
    let mut m = a.clone();
    let mut v = identity::<T>(n);
    for _sweep in 0..100 {
        let off: T = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        let diag: T = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= T::epsilon() * T::epsilon() * diag.max(T::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i][i]).collect();
    sorted(values, |j| (0..n).map(|i| v[i][j]).collect())
}

/// Singular values (descending) and right singular vectors of an `m x n`
/// matrix by one-sided Jacobi. `right[j]` pairs with `values[j]`.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub values: Vec<T>,
    pub right: Vec<Vec<T>>,
}

pub fn svd_jacobi<T: Real>(a: &Dense<T>) -> Svd<T> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut u = a.clone();
    let mut v = identity::<T>(cols);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: T = (0..rows).map(|i| u[i][p] * u[i][p]).sum();
                let beta: T = (0..rows).map(|i| u[i][q] * u[i][q]).sum();
                let gamma: T = (0..rows).map(|i| u[i][p] * u[i][q]).sum();
                if gamma.abs() <= T::epsilon() * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let t = if zeta == T::zero() { T::one() } else { t };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for row in u.iter_mut() {
                    let up = row[p];
                    let uq = row[q];
                    row[p] = c * up - s * uq;
                    row[q] = s * up + c * uq;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<T> = (0..cols).map(|j| (0..rows).map(|i| u[i][j] * u[i][j]).sum::<T>().sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    Svd {
        values: order.iter().map(|&j| norms[j]).collect(),
        right: order.iter().map(|&j| (0..cols).map(|i| v[i][j]).collect()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_symmetric(n: usize, seed: u64) -> Dense<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[i][j] = x;
                a[j][i] = x;
            }
        }
        a
    }

    #[test]
    fn two_by_two() {
        let a: Dense<f64> = vec![vec![2.0, -1.0], vec![-1.0, 2.0]];
        for e in [symmetric_eigen_ql(&a), symmetric_eigen_jacobi(&a)] {
            assert!((e.values[0] - 1.0).abs() < 1e-14);
            assert!((e.values[1] - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        let a: Dense<f64> = vec![vec![4.0, 2.0, 0.4], vec![2.0, 5.0, 1.0], vec![0.4, 1.0, 3.0]];
        let l = cholesky(&a).unwrap();
        let back = matmul(&l, &transpose(&l));
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[i][j] - a[i][j]).abs() < 1e-14);
            }
        }
        let mut b = vec![1.0, 2.0, 3.0];
        forward_subst(&l, &mut b);
        backward_subst_transposed(&l, &mut b);
        let check: Vec<f64> = a.iter().map(|row| dot(row, &b)).collect();
        for (c, t) in check.iter().zip([1.0, 2.0, 3.0]) {
            assert!((c - t).abs() < 1e-13);
        }
        assert!(cholesky(&vec![vec![1.0, 2.0], vec![2.0, 1.0]]).is_none());
    }

    #[test]
    fn svd_rank_deficient() {
        // Rank 1: nullity 2.
        let a: Dense<f64> = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![0.0, 0.0, 0.0]];
        let s = svd_jacobi(&a);
        assert!((s.values[0] - (70.0f64).sqrt()).abs() < 1e-12);
        assert!(s.values[1] < 1e-12 && s.values[2] < 1e-12);
        for v in &s.right[1..] {
            let av: Vec<f64> = a.iter().map(|row| dot(row, v)).collect();
            assert!(av.iter().all(|x| x.abs() < 1e-12));
        }
    }

    proptest! {
        #[test]
        fn ql_and_jacobi_agree(seed in 0u64..500, n in 1usize..16) {
            let a = random_symmetric(n, seed);
            let ql = symmetric_eigen_ql(&a);
            let jac = symmetric_eigen_jacobi(&a);
            for (x, y) in ql.values.iter().zip(&jac.values) {
                prop_assert!((x - y).abs() < 1e-11);
            }
            // A v = lambda v for the QL vectors.
            for (lam, v) in ql.values.iter().zip(&ql.vectors) {
                let av: Vec<f64> = a.iter().map(|row| dot(row, v)).collect();
                for (x, y) in av.iter().zip(v) {
                    prop_assert!((x - lam * y).abs() < 1e-11);
                }
                prop_assert!((dot(v, v) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn svd_values_match_gram_eigenvalues(seed in 0u64..300, rows in 1usize..7, cols in 1usize..6) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a: Dense<f64> = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let s = svd_jacobi(&a);
            let gram = matmul(&transpose(&a), &a);
            let e = symmetric_eigen_jacobi(&gram);
            let mut sq: Vec<f64> = s.values.iter().map(|v| v * v).collect();
            sq.reverse();
            for (x, y) in sq.iter().zip(&e.values) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
