//! Coupled rod/cross-section problem on `omega = (c, d)` with continuity
//! at the junction and the flux balance `|omega| u^a'(0) = q (u^b'(0-) - u^b'(0+))`.
//!
//! With `s = sqrt(lambda)` and the ansatz
//! `u^a = A sin(s(1 - x))`, `u^b = B- sin(s(x - c))` on `(c, 0)`,
//! `u^b = B+ sin(s(d - x))` on `(0, d)`, the conditions form a 3x3 system
//! `J(s) (A, B-, B+) = 0` whose determinant is
//! `F(s) = |omega| sin(cs) sin(ds) cos(s) - q sin(s) sin(ds) cos(cs) + q sin(s) sin(cs) cos(ds)`.

use crate::dense;
use crate::scalar::Real;

use super::LimitError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionProblem<T> {
    pub c: T,
    pub d: T,
    pub measure: T,
    pub q: T,
}

/// A root `s` of `F` with the null space of `J(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRoot<T> {
    pub s: T,
    pub value: T,
    pub multiplicity: usize,
    /// Null-space basis, entries `(A, B-, B+)`.
    pub amplitudes: Vec<[T; 3]>,
    /// Found as a tangent zero (no sign change).
    pub tangent: bool,
}

impl<T: Real> JunctionProblem<T> {
    pub fn new(c: T, d: T, measure: T, q: T) -> Result<Self, LimitError> {
        if !(c < T::zero() && d > T::zero()) {
            return Err(LimitError::BadInput(format!("need c < 0 < d, got ({c}, {d})")));
        }
        if !(q > T::zero()) || !q.is_finite() {
            return Err(LimitError::BadInput(format!("need q > 0, got {q}")));
        }
        if !(measure > T::zero()) {
            return Err(LimitError::BadInput(format!("need |omega| > 0, got {measure}")));
        }
        Ok(Self { c, d, measure, q })
    }

    /// The three terms of `F(s)`.
    pub fn terms(&self, s: T) -> [T; 3] {
        let (cs, ds) = (self.c * s, self.d * s);
        [
            self.measure * cs.sin() * ds.sin() * s.cos(),
            -self.q * s.sin() * ds.sin() * cs.cos(),
            self.q * s.sin() * cs.sin() * ds.cos(),
        ]
    }

    pub fn f(&self, s: T) -> T {
        let [a, b, c] = self.terms(s);
        a + b + c
    }

    pub fn f_prime(&self, s: T) -> T {
        let (c, d, w, q) = (self.c, self.d, self.measure, self.q);
        let (sc, cc) = ((c * s).sin(), (c * s).cos());
        let (sd, cd) = ((d * s).sin(), (d * s).cos());
        let (ss, cs) = (s.sin(), s.cos());
        let t1 = w * (c * cc * sd * cs + d * sc * cd * cs - sc * sd * ss);
        let t2 = -q * (cs * sd * cc + d * ss * cd * cc - c * ss * sd * sc);
        let t3 = q * (cs * sc * cd + c * ss * cc * cd - d * ss * sc * sd);
        t1 + t2 + t3
    }

    /// Rows: `u^a(0) = u^b(0-)`, `u^b(0-) = u^b(0+)`, flux balance divided by `s`.
    pub fn matrix(&self, s: T) -> [[T; 3]; 3] {
        let (sc, cc) = ((self.c * s).sin(), (self.c * s).cos());
        let (sd, cd) = ((self.d * s).sin(), (self.d * s).cos());
        [
            [s.sin(), sc, T::zero()],
            [T::zero(), -sc, -sd],
            [-self.measure * s.cos(), -self.q * cc, -self.q * cd],
        ]
    }

    /// Bound on `|F|` over all `s`.
    pub fn envelope(&self) -> T {
        self.measure + self.q + self.q
    }

    pub fn scan_step(&self) -> T {
        T::PI() / (T::lit(8.0) * T::one().max(-self.c).max(self.d))
    }

    /// Null-space basis of `J(s)`: right singular vectors whose singular value
    /// is at most `rank_tol * sigma_max`.
    pub fn null_space(&self, s: T) -> Vec<[T; 3]> {
        let j: dense::Dense<T> = self.matrix(s).iter().map(|r| r.to_vec()).collect();
        let svd = dense::svd_jacobi(&j);
        let top = svd.values[0];
        let tol = T::reachable_tol(1e-8, 64.0, T::one()) * top;
        svd.values
            .iter()
            .zip(&svd.right)
            .filter(|(&sv, _)| sv <= tol)
            .map(|(_, v)| [v[0], v[1], v[2]])
            .collect()
    }

    fn bisect(&self, g: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
        let mut glo = g(lo);
        let tol = T::reachable_tol(1e-13, 4.0, hi);
        for _ in 0..200 {
            let mid = (lo + hi) / T::lit(2.0);
            if hi - lo <= tol || mid <= lo || mid >= hi {
                break;
            }
            let gm = g(mid);
            if gm == T::zero() {
                return mid;
            }
            if (gm > T::zero()) == (glo > T::zero()) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / T::lit(2.0)
    }

    fn certify(&self, s: T, lo: T, hi: T) -> Result<(), LimitError> {
        let limit = T::reachable_tol(1e-10, 1e3, T::one()) * self.envelope();
        if self.f(s).abs() <= limit {
            Ok(())
        } else {
            Err(LimitError::RootLoss { lo: lo.as_f64(), hi: hi.as_f64() })
        }
    }

    /// Roots in one scan cell, ascending.
    fn cell_roots(&self, a: T, b: T) -> Result<Vec<(T, bool)>, LimitError> {
        let f = |s: T| self.f(s);
        let g = |s: T| self.f_prime(s);
        let mut knots = vec![a];
        let extremum = if (g(a) > T::zero()) != (g(b) > T::zero()) {
            let e = self.bisect(g, a, b);
            knots.push(e);
            Some(e)
        } else {
            None
        };
        knots.push(b);
        let mut out = Vec::new();
        for w in knots.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let (f0, f1) = (f(x0), f(x1));
            if f0 == T::zero() {
                out.push((x0, false));
            } else if f1 != T::zero() && (f0 > T::zero()) != (f1 > T::zero()) {
                let root = self.bisect(f, x0, x1);
                self.certify(root, x0, x1)?;
                out.push((root, false));
            }
        }
        if let Some(e) = extremum {
            let (fa, fe, fb) = (f(a), f(e), f(b));
            let same = |x: T, y: T| (x > T::zero()) == (y > T::zero());
            if fe != T::zero() && same(fa, fe) && same(fe, fb) {
                let near = fe.abs() <= T::reachable_tol(1e-10, 1e3, T::one()) * self.envelope();
                if near && self.null_space(e).len() >= 2 {
                    out.push((e, true));
                }
            }
        }
        if f(b) == T::zero() {
            out.push((b, false));
        }
        out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        Ok(out)
    }

    /// The first `k_max` distinct roots in `s > 0`, ascending.
    pub fn roots(&self, k_max: usize) -> Result<Vec<CoupledRoot<T>>, LimitError> {
        let step = self.scan_step();
        let mut found: Vec<CoupledRoot<T>> = Vec::with_capacity(k_max);
        let mut a = step * T::lit(1e-6);
        let dedup = T::reachable_tol(1e-11, 64.0, T::one());
        let mut cell = 1usize;
        while found.len() < k_max {
            if cell > 50_000_000 {
                return Err(LimitError::RootLoss { lo: a.as_f64(), hi: f64::INFINITY });
            }
            let b = step * T::from_usize_lossy(cell);
            for (s, tangent) in self.cell_roots(a, b)? {
                if found.last().is_some_and(|r| (r.s - s).abs() <= dedup * s.max(T::one())) {
                    continue;
                }
                let amplitudes = self.null_space(s);
                found.push(CoupledRoot { s, value: s * s, multiplicity: amplitudes.len(), amplitudes, tangent });
            }
            a = b;
            cell += 1;
        }
        found.truncate(k_max);
        Ok(found)
    }
}
