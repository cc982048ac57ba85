//! Smallest eigenpairs of a symmetric positive definite pencil `K x = lambda M x`.
//!
//! The iterative path builds a block Krylov space of `K^{-1} M` from a
//! seeded start block, keeps it `M`-orthonormal (classical Gram-Schmidt,
//! applied twice) and restarts from the Ritz vectors. The dense oracle
//! reduces to a standard problem through the Cholesky factor of `M`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::Pencil;
use crate::cholesky::{CholeskyError, SkylineCholesky};
use crate::dense::{self, Dense};
use crate::scalar::Real;
use crate::sparse::SparseSymmetric;

/// Largest order accepted by [`dense_oracle`].
pub const ORACLE_MAX_ORDER: usize = 2000;

#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
    /// `||K x - lambda M x||_2` per pair.
    pub residuals: Vec<T>,
    /// `X^T M X`.
    pub mass_gram: Dense<T>,
    pub converged: Vec<bool>,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First `k` pairs.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            values: self.values[..k].to_vec(),
            vectors: self.vectors[..k].to_vec(),
            residuals: self.residuals[..k].to_vec(),
            mass_gram: self.mass_gram[..k].iter().map(|row| row[..k].to_vec()).collect(),
            converged: self.converged[..k].to_vec(),
        }
    }

    /// `max |x_i^T M x_j - delta_ij|` over the stored Gram matrix.
    pub fn orthonormality_deviation(&self) -> T {
        let mut worst = T::zero();
        for (i, row) in self.mass_gram.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Error, Clone)]
pub enum EigenError<T: Real> {
    #[error("requested {requested} eigenpairs of a pencil of order {order}")]
    BadRequest { requested: usize, order: usize },
    #[error("stiffness factorization failed: {0}")]
    FactorizationFailure(CholeskyError),
    #[error("mass matrix is not positive definite")]
    MassNotDefinite,
    #[error("not converged after {iterations} restarts")]
    NotConverged { iterations: usize, partial: Box<Spectrum<T>> },
    #[error("order {order} exceeds the dense limit {limit}")]
    TooLarge { order: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Extra vectors carried beyond the requested count.
    pub block: usize,
    /// Krylov steps per restart.
    pub depth: usize,
    pub seed: u64,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self { tol: T::reachable_tol(1e-10, 64.0, T::one()), max_iter: 500, block: 4, depth: 3, seed: 0x5eed }
    }
}

fn inf_norm<T: Real>(a: &SparseSymmetric<T>) -> T {
    let mut sums = vec![T::zero(); a.order()];
    for i in 0..a.order() {
        for (j, v) in a.row(i) {
            sums[i] += v.abs();
            if j != i {
                sums[j] += v.abs();
            }
        }
    }
    sums.into_iter().fold(T::zero(), T::max)
}

fn norm2<T: Real>(x: &[T]) -> T {
    dense::dot(x, x).sqrt()
}

fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi += alpha * xi);
}

/// Residual norm and the precision floor it is compared against.
struct ResidualCheck<T> {
    k_norm: T,
    m_norm: T,
    tol: T,
}

impl<T: Real> ResidualCheck<T> {
    fn new(k: &SparseSymmetric<T>, m: &SparseSymmetric<T>, tol: T) -> Self {
        Self { k_norm: inf_norm(k), m_norm: inf_norm(m), tol }
    }

    fn residual(&self, k: &SparseSymmetric<T>, m: &SparseSymmetric<T>, lambda: T, x: &[T]) -> T {
        let mut r = k.mul_vec(x);
        axpy(-lambda, &m.mul_vec(x), &mut r);
        norm2(&r)
    }

    /// `tol * max(1, lambda)` for an `M`-normalized vector, raised to the
    /// rounding level `c eps (||K|| + lambda ||M||) ||x||_2` when that is larger.
    fn bound(&self, lambda: T, x: &[T]) -> T {
        let requested = self.tol * lambda.max(T::one());
        let floor = T::lit(32.0) * T::epsilon() * (self.k_norm + lambda.abs() * self.m_norm) * norm2(x);
        requested.max(floor)
    }
}

/// `M`-orthonormal basis under construction, with `M v` cached.
struct Basis<T> {
    v: Vec<Vec<T>>,
    mv: Vec<Vec<T>>,
}

impl<T: Real> Basis<T> {
    fn len(&self) -> usize {
        self.v.len()
    }

    /// Orthogonalizes `z` against the basis (twice) and appends it unless it
    /// has collapsed relative to its starting `M`-norm.
    fn push(&mut self, m: &SparseSymmetric<T>, mut z: Vec<T>) -> bool {
        let mut mz = m.mul_vec(&z);
        let start = dense::dot(&z, &mz).max(T::zero()).sqrt();
        if !(start > T::zero()) {
            return false;
        }
        for _ in 0..2 {
            let coeffs: Vec<T> = self.mv.iter().map(|mv| dense::dot(mv, &z)).collect();
            for (c, (v, mv)) in coeffs.iter().zip(self.v.iter().zip(&self.mv)) {
                axpy(-*c, v, &mut z);
                axpy(-*c, mv, &mut mz);
            }
        }
        mz = m.mul_vec(&z);
        let nrm = dense::dot(&z, &mz).max(T::zero()).sqrt();
        if !(nrm > T::lit(256.0) * T::epsilon() * start) {
            return false;
        }
        let inv = T::one() / nrm;
        z.iter_mut().for_each(|x| *x *= inv);
        mz.iter_mut().for_each(|x| *x *= inv);
        self.v.push(z);
        self.mv.push(mz);
        true
    }
}

fn ritz_pairs<T: Real>(k: &SparseSymmetric<T>, basis: &Basis<T>, count: usize) -> (Vec<T>, Vec<Vec<T>>) {
    let s = basis.len();
    let kv: Vec<Vec<T>> = basis.v.iter().map(|v| k.mul_vec(v)).collect();
    let mut h = dense::zeros::<T>(s, s);
    for i in 0..s {
        for j in 0..=i {
            let x = (dense::dot(&basis.v[i], &kv[j]) + dense::dot(&basis.v[j], &kv[i])) / T::lit(2.0);
            h[i][j] = x;
            h[j][i] = x;
        }
    }
    let eig = dense::symmetric_eigen_ql(&h);
    let n = basis.v[0].len();
    let count = count.min(s);
    let vectors = eig.vectors[..count]
        .iter()
        .map(|y| {
            let mut x = vec![T::zero(); n];
            for (c, v) in y.iter().zip(&basis.v) {
                axpy(*c, v, &mut x);
            }
            x
        })
        .collect();
    (eig.values[..count].to_vec(), vectors)
}

fn gram<T: Real>(m: &SparseSymmetric<T>, xs: &[Vec<T>]) -> Dense<T> {
    let mx: Vec<Vec<T>> = xs.iter().map(|x| m.mul_vec(x)).collect();
    xs.iter().map(|x| mx.iter().map(|y| dense::dot(x, y)).collect()).collect()
}

/// The `nev` smallest eigenpairs of `(k, m)`.
pub fn smallest_eigenpairs<T: Real>(
    k: &SparseSymmetric<T>,
    m: &SparseSymmetric<T>,
    nev: usize,
    opts: &EigenOptions<T>,
) -> Result<Spectrum<T>, EigenError<T>> {
    let n = k.order();
    if nev == 0 || nev > n || m.order() != n {
        return Err(EigenError::BadRequest { requested: nev, order: n });
    }
    let factor = SkylineCholesky::factor(k).map_err(EigenError::FactorizationFailure)?;
    let apply = |x: &[T]| factor.solve(&m.mul_vec(x));
    let check = ResidualCheck::new(k, m, opts.tol);
    let width = (nev + opts.block).min(n);
    let cap = (width * (opts.depth + 1)).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Vec<T>> =
        (0..width).map(|_| (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect()).collect();

    let mut last: Option<Spectrum<T>> = None;
    for _iter in 0..opts.max_iter.max(1) {
        let mut basis = Basis { v: Vec::with_capacity(cap), mv: Vec::with_capacity(cap) };
        for x in start.drain(..) {
            basis.push(m, x);
        }
        let mut frontier: Vec<usize> = (0..basis.len()).collect();
        while basis.len() < cap && !frontier.is_empty() {
            let mut next = Vec::new();
            for &i in &frontier {
                if basis.len() >= cap {
                    break;
                }
                let z = apply(&basis.v[i]);
                if basis.push(m, z) {
                    next.push(basis.len() - 1);
                }
            }
            frontier = next;
        }
        if basis.len() < nev {
            // The start block was degenerate; refill with fresh random directions.
            while basis.len() < nev.max(width) {
                let z: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
                basis.push(m, z);
            }
        }
        let (values, vectors) = ritz_pairs(k, &basis, width);
        let residuals: Vec<T> = values.iter().zip(&vectors).map(|(&l, x)| check.residual(k, m, l, x)).collect();
        let converged: Vec<bool> =
            values.iter().zip(&vectors).zip(&residuals).map(|((&l, x), &r)| r <= check.bound(l, x)).collect();
        let done = converged[..nev].iter().all(|&c| c);
        let spectrum = Spectrum {
            mass_gram: gram(m, &vectors[..nev]),
            values: values[..nev].to_vec(),
            vectors: vectors[..nev].to_vec(),
            residuals: residuals[..nev].to_vec(),
            converged: converged[..nev].to_vec(),
        };
        if done {
            return Ok(spectrum);
        }
        start = vectors;
        // Keep the block full width so clusters stay resolved.
        while start.len() < width {
            start.push((0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect());
        }
        last = Some(spectrum);
    }
    Err(EigenError::NotConverged {
        iterations: opts.max_iter,
        partial: Box::new(last.expect("at least one restart")),
    })
}

/// Every eigenpair of `(k, m)` by dense reduction.
pub fn dense_oracle<T: Real>(k: &SparseSymmetric<T>, m: &SparseSymmetric<T>) -> Result<Spectrum<T>, EigenError<T>> {
    let n = k.order();
    if n > ORACLE_MAX_ORDER {
        return Err(EigenError::TooLarge { order: n, limit: ORACLE_MAX_ORDER });
    }
    if n == 0 || m.order() != n {
        return Err(EigenError::BadRequest { requested: n, order: m.order() });
    }
    let l = dense::cholesky(&m.to_dense()).ok_or(EigenError::MassNotDefinite)?;
    // C = L^{-1} K L^{-T}, column by column then row by row.
    let kd = k.to_dense();
    let mut w = dense::transpose(&kd);
    for col in w.iter_mut() {
        dense::forward_subst(&l, col);
    }
    let mut c = dense::transpose(&w);
    for row in c.iter_mut() {
        dense::forward_subst(&l, row);
    }
    for i in 0..n {
        for j in 0..i {
            let s = (c[i][j] + c[j][i]) / T::lit(2.0);
            c[i][j] = s;
            c[j][i] = s;
        }
    }
    let eig = dense::symmetric_eigen_ql(&c);
    let vectors: Vec<Vec<T>> = eig
        .vectors
        .into_iter()
        .map(|mut y| {
            dense::backward_subst_transposed(&l, &mut y);
            y
        })
        .collect();
    let check = ResidualCheck::new(k, m, T::reachable_tol(1e-10, 64.0, T::one()));
    let residuals: Vec<T> = eig.values.iter().zip(&vectors).map(|(&lam, x)| check.residual(k, m, lam, x)).collect();
    Ok(Spectrum {
        mass_gram: gram(m, &vectors),
        converged: vec![true; n],
        values: eig.values,
        vectors,
        residuals,
    })
}

impl<T: Real> Pencil<T> {
    pub fn smallest_eigenpairs(&self, nev: usize, opts: &EigenOptions<T>) -> Result<Spectrum<T>, EigenError<T>> {
        smallest_eigenpairs(&self.k, &self.m, nev, opts)
    }

    pub fn dense_oracle(&self) -> Result<Spectrum<T>, EigenError<T>> {
        dense_oracle(&self.k, &self.m)
    }
}

/// Upper bound `2^k k^2 pi^2` on the `k`-th eigenvalue (1-based).
pub fn eigenvalue_bound<T: Real>(k: usize) -> T {
    let kf = T::from_usize_lossy(k);
    T::lit(2.0).powi(k as i32) * kf * kf * T::PI() * T::PI()
}

/// Largest principal angle (radians) between the `M`-orthonormal sets `x` and `y`.
pub fn max_principal_angle<T: Real>(m: &SparseSymmetric<T>, x: &[Vec<T>], y: &[Vec<T>]) -> T {
    let my: Vec<Vec<T>> = y.iter().map(|v| m.mul_vec(v)).collect();
    let c: Dense<T> = x.iter().map(|xi| my.iter().map(|mv| dense::dot(xi, mv)).collect()).collect();
    let svd = dense::svd_jacobi(&c);
    let smallest = svd.values.iter().copied().take(x.len().min(y.len())).fold(T::infinity(), T::min);
    smallest.min(T::one()).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_pencil;
    use crate::geometry::{make_geometry, CrossSection, ThinParams};
    use crate::mesh::{make_mesh, Grading, Levels};
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn random_spd(n: usize, seed: u64) -> SparseSymmetric<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Dense<f64> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let mut a = dense::matmul(&dense::transpose(&b), &b);
        (0..n).for_each(|i| a[i][i] += 0.5);
        SparseSymmetric::from_dense(&a)
    }

    fn coarse_pencil(m: usize) -> Pencil<f64> {
        let g = make_geometry(2, CrossSection::Interval { c: -1.0, d: 1.0 }).unwrap();
        let mesh = make_mesh(&g, Levels::uniform(m), Grading::none()).unwrap();
        build_pencil(&mesh, &ThinParams::new(0.25, 0.25).unwrap()).unwrap()
    }

    #[test]
    fn diagonal_pencil() {
        let k = SparseSymmetric::from_diagonal(&[1.0, 2.0, 5.0]);
        let m = SparseSymmetric::identity(3);
        let s = smallest_eigenpairs(&k, &m, 2, &EigenOptions::<f64>::default()).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-12 && (s.values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_small_cases() {
        let k = SparseSymmetric::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let s: Spectrum<f64> = dense_oracle(&k, &SparseSymmetric::identity(2)).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-14 && (s.values[1] - 3.0).abs() < 1e-14);
        let a = random_spd(6, 3);
        let s = dense_oracle(&a, &a).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn oracle_guard() {
        let big = SparseSymmetric::<f64>::identity(ORACLE_MAX_ORDER + 1);
        assert!(matches!(dense_oracle(&big, &big), Err(EigenError::TooLarge { .. })));
    }

    #[test]
    fn random_pair_matches_oracle() {
        let k = random_spd(50, 11);
        let m = random_spd(50, 12);
        let s = smallest_eigenpairs(&k, &m, 5, &EigenOptions::default()).unwrap();
        let o = dense_oracle(&k, &m).unwrap();
        for (a, b) in s.values.iter().zip(&o.values) {
            assert!((a - b).abs() <= 1e-8 * b.abs());
        }
        assert!(s.orthonormality_deviation() < 1e-8);
    }

    #[test]
    fn coarse_fem_pencil_matches_oracle() {
        let p = coarse_pencil(4);
        let s = p.smallest_eigenpairs(4, &EigenOptions::default()).unwrap();
        let o = p.dense_oracle().unwrap();
        for (i, (a, b)) in s.values.iter().zip(&o.values).enumerate() {
            assert!((a - b).abs() <= 1e-8 * b, "pair {i}: {a} vs {b}");
            let rq = p.k.bilinear(&s.vectors[i], &s.vectors[i]) / p.m.bilinear(&s.vectors[i], &s.vectors[i]);
            assert!((rq - a).abs() <= 1e-8 * a.max(1.0));
        }
        let angle = max_principal_angle(&p.m, &s.vectors, &o.vectors[..4]);
        assert!(angle < 1e-6, "angle {angle}");
        for (i, v) in s.values.iter().enumerate() {
            assert!(*v <= eigenvalue_bound::<f64>(i + 1));
        }
    }

    #[test]
    fn exhaustion_is_monotone() {
        let p = coarse_pencil(6);
        let opts = EigenOptions::default();
        let a = p.smallest_eigenpairs(3, &opts).unwrap();
        let b = p.smallest_eigenpairs(4, &opts).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10 * y.max(1.0));
        }
    }

    #[test]
    fn indefinite_stiffness_is_reported() {
        let k = SparseSymmetric::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let r = smallest_eigenpairs(&k, &SparseSymmetric::identity(2), 1, &EigenOptions::default());
        assert!(matches!(r, Err(EigenError::FactorizationFailure(_))));
    }

    #[test]
    fn restart_budget_exhaustion_returns_partial() {
        let k = random_spd(60, 5);
        let m = SparseSymmetric::identity(60);
        let opts = EigenOptions { tol: 1e-300, max_iter: 2, block: 1, depth: 1, seed: 1 };
        match smallest_eigenpairs(&k, &m, 3, &opts) {
            Err(EigenError::NotConverged { partial, .. }) => assert_eq!(partial.len(), 3),
            Ok(s) => assert!(s.converged.iter().all(|&c| c)),
            Err(e) => panic!("{e}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn min_max_characterization(seed in 0u64..10_000, n in 3usize..9, k in 1usize..3) {
            let kk = random_spd(n, seed);
            let mm = random_spd(n, seed + 77);
            let o = dense_oracle(&kk, &mm).unwrap();
            let lam_k = o.values[k - 1];
            // Max Rayleigh quotient on span of the first k eigenvectors is lambda_k.
            let proj = |xs: &[Vec<f64>]| -> f64 {
                let mut basis = Basis { v: vec![], mv: vec![] };
                for x in xs {
                    basis.push(&mm, x.clone());
                }
                let (vals, _) = ritz_pairs(&kk, &basis, basis.len());
                vals[basis.len() - 1]
            };
            prop_assert!((proj(&o.vectors[..k]) - lam_k).abs() < 1e-9 * lam_k.max(1.0));
            // Any other k-dimensional subspace does no better.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            for _ in 0..8 {
                let xs: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
                prop_assert!(proj(&xs) >= lam_k - 1e-9 * lam_k.max(1.0));
            }
        }
    }
}
