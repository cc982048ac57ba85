//! Eigenvector comparisons against the analytic limit vectors.

use crate::assembly::{cell_quadrature, Pencil};
use crate::eigensolve::max_principal_angle;
use crate::geometry::{Regime, ThinParams};
use crate::limit::{LimitEigenvalue, LimitEigenvector};
use crate::mesh::{Mesh, Part};
use crate::scalar::Real;

use super::StudyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorNorms<T> {
    /// `||u^a_n - u^a||` in `H^1(Omega^a)`.
    pub a_h1: T,
    /// `||s u^b_n - u^b||` in `H^1(Omega^b)`.
    pub b_h1: T,
    /// `(1/r) ||D_x' u^a_n||`.
    pub ga: T,
    /// `(s/h) ||d_N u^b_n||`.
    pub gb: T,
}

/// Factor `s` applied to the discrete b-part before comparison: `1` for a
/// finite ratio, `sqrt(h / r^(N-1))` otherwise, so that the rescaled pair has
/// unit norm in the limit inner product.
pub fn b_scale<T: Real>(regime: &Regime<T>, params: &ThinParams<T>, dim: usize) -> T {
    match regime {
        Regime::Finite(_) => T::one(),
        Regime::Zero | Regime::Infinite => params.volume_ratio(dim).sqrt(),
    }
}

/// Limit vector sampled at the free nodes, in the discrete normalization.
pub fn interpolate_limit<T: Real>(mesh: &Mesh<T>, pencil: &Pencil<T>, v: &LimitEigenvector<T>, scale: T) -> Vec<T> {
    pencil
        .dofs
        .free_nodes
        .iter()
        .map(|&node| match mesh.part_of(node) {
            Part::A => v.a(mesh.axial_coord(node)),
            Part::B => v.b(mesh.cross_coords(node)) / scale,
        })
        .collect()
}

/// Corrector norms of the discrete vector `x` (free unknowns) against the
/// single eigenvector of a simple limit eigenvalue.
pub fn corrector_check<T: Real>(
    mesh: &Mesh<T>,
    pencil: &Pencil<T>,
    x: &[T],
    limit: &LimitEigenvalue<T>,
    regime: &Regime<T>,
) -> Result<CorrectorNorms<T>, StudyError> {
    if limit.multiplicity != 1 {
        return Err(StudyError::ClusterSkipped { value: limit.value.as_f64(), multiplicity: limit.multiplicity });
    }
    let v = &limit.vectors[0];
    let dim = mesh.dim();
    let params = pencil.params;
    let s = b_scale(regime, &params, dim);
    let z = interpolate_limit(mesh, pencil, v, s);
    let sign = if pencil.m.bilinear(x, &z) < T::zero() { -T::one() } else { T::one() };
    let u: Vec<T> = pencil.dofs.expand(x).into_iter().map(|c| c * sign).collect();

    let corners = 1usize << dim;
    let (mut a_sq, mut b_sq, mut ga_sq, mut gb_sq) = (T::zero(), T::zero(), T::zero(), T::zero());
    for cell in &mesh.cells {
        for qp in cell_quadrature(cell, dim) {
            let mut uh = T::zero();
            let mut grad = [T::zero(); 3];
            for c in 0..corners {
                let nodal = u[cell.nodes[c]];
                uh += qp.values[c] * nodal;
                for a in 0..dim {
                    grad[a] += qp.grads[c][a] * nodal;
                }
            }
            let cross_sq: T = grad[..dim - 1].iter().map(|&g| g * g).sum();
            let axial = grad[dim - 1];
            match cell.part {
                Part::A => {
                    let xn = qp.x[dim - 1];
                    let e0 = uh - v.a(xn);
                    let e1 = axial - v.a_prime(xn);
                    a_sq += qp.weight * (e0 * e0 + cross_sq + e1 * e1);
                    ga_sq += qp.weight * cross_sq;
                }
                Part::B => {
                    let xp = &qp.x[..dim - 1];
                    let lg = v.b_grad(xp);
                    let e0 = s * uh - v.b(xp);
                    let mut e1 = (s * axial) * (s * axial);
                    for a in 0..dim - 1 {
                        let d = s * grad[a] - lg[a];
                        e1 += d * d;
                    }
                    b_sq += qp.weight * (e0 * e0 + e1);
                    gb_sq += qp.weight * (s * axial) * (s * axial);
                }
            }
        }
    }
    Ok(CorrectorNorms { a_h1: a_sq.sqrt(), b_h1: b_sq.sqrt(), ga: ga_sq.sqrt() / params.r, gb: gb_sq.sqrt() / params.h })
}

/// `max |x_i^T M x_j - delta_ij|` recomputed from the pencil.
pub fn orthonormality_check<T: Real>(vectors: &[Vec<T>], pencil: &Pencil<T>) -> T {
    let mx: Vec<Vec<T>> = vectors.iter().map(|v| pencil.m.mul_vec(v)).collect();
    let mut worst = T::zero();
    for (i, xi) in vectors.iter().enumerate() {
        for (j, mj) in mx.iter().enumerate() {
            let g: T = xi.iter().zip(mj).map(|(&a, &b)| a * b).sum();
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

/// Largest principal angle between a discrete cluster and the interpolated
/// limit eigenspace of the same value.
pub fn cluster_angle<T: Real>(
    mesh: &Mesh<T>,
    pencil: &Pencil<T>,
    discrete: &[Vec<T>],
    limit: &LimitEigenvalue<T>,
    regime: &Regime<T>,
) -> T {
    let s = b_scale(regime, &pencil.params, mesh.dim());
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(limit.vectors.len());
    for v in &limit.vectors {
        let mut z = interpolate_limit(mesh, pencil, v, s);
        for _ in 0..2 {
            for e in &basis {
                let p = pencil.m.bilinear(&z, e);
                z.iter_mut().zip(e).for_each(|(zi, &ei)| *zi -= p * ei);
            }
        }
        let norm = pencil.m.bilinear(&z, &z).sqrt();
        if norm > T::zero() {
            basis.push(z.into_iter().map(|c| c / norm).collect());
        }
    }
    max_principal_angle(&pencil.m, discrete, &basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_pencil;
    use crate::eigensolve::EigenOptions;
    use crate::geometry::{make_geometry, CrossSection};
    use crate::limit::gathered_spectrum;
    use crate::mesh::{make_mesh, Grading, Levels};

    fn setup(regime: Regime<f64>, r: f64, m: usize) -> (Mesh<f64>, Pencil<f64>) {
        let g = make_geometry(2, CrossSection::Interval { c: -1.0, d: 1.0 }).unwrap();
        let mesh = make_mesh(&g, Levels::uniform(m), Grading::none()).unwrap();
        let params = ThinParams::new(r, regime.thickness_for(2, r)).unwrap();
        let pencil = build_pencil(&mesh, &params).unwrap();
        (mesh, pencil)
    }

    /// H1 interpolation error of the Q1 interpolant, by an independent fine sampling.
    #[test]
    fn interpolant_gives_interpolation_error_only() {
        let regime = Regime::Finite(1.0);
        let (mesh, pencil) = setup(regime, 0.25, 16);
        let limit = gathered_spectrum(regime, &mesh.geometry, 1).unwrap();
        let v = limit.entries[0].vectors[0];
        let z = interpolate_limit(&mesh, &pencil, &v, 1.0);
        let norms = corrector_check(&mesh, &pencil, &z, &limit.entries[0], &regime).unwrap();
        // The tie makes the a-part trace differ from the limit near x_N = 0;
        // elsewhere the error is the Q1 interpolation error, O(1/m).
        assert!(norms.a_h1 < 0.2 && norms.b_h1 < 0.2, "{norms:?}");
        let (mesh2, finer) = setup(regime, 0.25, 32);
        let z2 = interpolate_limit(&mesh2, &finer, &v, 1.0);
        let n2 = corrector_check(&mesh2, &finer, &z2, &limit.entries[0], &regime).unwrap();
        // First order in the cell width.
        assert!(n2.b_h1 < 0.6 * norms.b_h1, "{} vs {}", n2.b_h1, norms.b_h1);
    }

    #[test]
    fn sign_flip_gives_identical_norms() {
        let regime = Regime::Finite(1.0);
        let (mesh, pencil) = setup(regime, 0.25, 12);
        let s = pencil.smallest_eigenpairs(1, &EigenOptions::default()).unwrap();
        let limit = gathered_spectrum(regime, &mesh.geometry, 1).unwrap();
        let x = &s.vectors[0];
        let flipped: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = corrector_check(&mesh, &pencil, x, &limit.entries[0], &regime).unwrap();
        let b = corrector_check(&mesh, &pencil, &flipped, &limit.entries[0], &regime).unwrap();
        assert_eq!(a, b);
        assert!(a.a_h1 >= 0.0 && a.b_h1 >= 0.0 && a.ga >= 0.0 && a.gb >= 0.0);
    }

    #[test]
    fn clusters_are_skipped() {
        let regime = Regime::Finite(1.0);
        let (mesh, pencil) = setup(regime, 0.25, 8);
        let limit = gathered_spectrum(regime, &mesh.geometry, 2).unwrap();
        let x = vec![0.0; pencil.order()];
        assert!(matches!(
            corrector_check(&mesh, &pencil, &x, &limit.entries[1], &regime),
            Err(StudyError::ClusterSkipped { multiplicity: 2, .. })
        ));
    }

    #[test]
    fn orthonormality_of_solver_output() {
        let regime = Regime::Zero;
        let (_, pencil) = setup(regime, 0.25, 10);
        let s = pencil.smallest_eigenpairs(4, &EigenOptions::default()).unwrap();
        assert!(orthonormality_check(&s.vectors, &pencil) <= 1e-8);
        assert!(orthonormality_check(&s.vectors[..1], &pencil) <= 1e-8);
    }

    #[test]
    fn scale_by_regime() {
        let p = ThinParams::new(0.25, 0.0625).unwrap();
        assert_eq!(b_scale(&Regime::Finite(0.25), &p, 2), 1.0);
        assert!((b_scale(&Regime::<f64>::Zero, &p, 2) - 0.5).abs() < 1e-15);
    }
}
