//! Closed-form spectra of the uncoupled one-dimensional and cross-section problems.

use crate::geometry::{CrossSection, Geometry};
use crate::scalar::Real;

use super::vector::{CrossPart, RodPart};
use super::Branch;

/// `u'' + lambda u = 0` on `(0, 1)` with `u(1) = 0`, `u'(0) = 0`:
/// values `(pi/2 + k pi)^2`, eigenvector `cos((pi/2 + k pi) x_N)`.
pub fn rod_neumann_dirichlet<T: Real>(k_max: usize) -> Vec<(T, RodPart<T>)> {
    (0..k_max)
        .map(|k| {
            let s = T::FRAC_PI_2() + T::PI() * T::from_usize_lossy(k);
            let amp = if k % 2 == 0 { T::one() } else { -T::one() };
            (s * s, RodPart { amp, freq: s })
        })
        .collect()
}

/// `u(0) = u(1) = 0`: values `(k pi)^2`, eigenvector `sin(k pi x_N)`.
pub fn rod_dirichlet_dirichlet<T: Real>(k_max: usize) -> Vec<(T, RodPart<T>)> {
    (1..=k_max)
        .map(|k| {
            let s = T::PI() * T::from_usize_lossy(k);
            let amp = if k % 2 == 1 { T::one() } else { -T::one() };
            (s * s, RodPart { amp, freq: s })
        })
        .collect()
}

/// Dirichlet spectrum of the whole cross-section, ascending, first `k_max` modes.
pub fn cross_section_dirichlet<T: Real>(geometry: &Geometry<T>, k_max: usize) -> Vec<(T, Branch, CrossPart<T>)> {
    match geometry.omega() {
        CrossSection::Interval { c, d } => (1..=k_max)
            .map(|k| {
                let s = T::PI() * T::from_usize_lossy(k) / (d - c);
                let right = if k % 2 == 1 { T::one() } else { -T::one() };
                (s * s, Branch::Cross, CrossPart::Interval { freq: s, left: T::one(), right, c, d })
            })
            .collect(),
        CrossSection::Rect { wx, wy } => {
            let mut modes: Vec<(T, Branch, CrossPart<T>)> = Vec::with_capacity(k_max * k_max);
            for i in 1..=k_max {
                for j in 1..=k_max {
                    let sx = T::PI() * T::from_usize_lossy(i) / (wx + wx);
                    let sy = T::PI() * T::from_usize_lossy(j) / (wy + wy);
                    modes.push((sx * sx + sy * sy, Branch::Cross, CrossPart::Rect { amp: T::one(), i, j, wx, wy }));
                }
            }
            modes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
            modes.truncate(k_max);
            modes
        }
    }
}

/// Dirichlet spectra of `(c, 0)` and `(0, d)` taken separately.
pub fn split_interval_dirichlet<T: Real>(c: T, d: T, k_max: usize) -> Vec<(T, Branch, CrossPart<T>)> {
    let mut out = Vec::with_capacity(2 * k_max);
    for k in 1..=k_max {
        let kf = T::from_usize_lossy(k);
        let s = T::PI() * kf / (-c);
        out.push((s * s, Branch::CrossLeft, CrossPart::Interval { freq: s, left: T::one(), right: T::zero(), c, d }));
        let s = T::PI() * kf / d;
        out.push((s * s, Branch::CrossRight, CrossPart::Interval { freq: s, left: T::zero(), right: T::one(), c, d }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_geometry;
    use crate::limit::vector::{LimitEigenvector, Space};

    #[test]
    fn rod_values() {
        let nd = rod_neumann_dirichlet::<f64>(2);
        assert!((nd[0].0 - 2.46740110027234).abs() < 1e-12);
        assert!((nd[1].0 - 22.20660990245106).abs() < 1e-11);
        let dd = rod_dirichlet_dirichlet::<f64>(2);
        assert!((dd[0].0 - std::f64::consts::PI.powi(2)).abs() < 1e-13);
        assert!((dd[1].0 - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn rod_descriptors_are_the_stated_functions() {
        let v = |rod: RodPart<f64>| LimitEigenvector { space: Space::Zero, measure: 1.0, rod, cross: CrossPart::None };
        for (k, (_, rod)) in rod_neumann_dirichlet::<f64>(5).into_iter().enumerate() {
            let s = std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64;
            for x in [0.0, 0.3, 0.77, 1.0] {
                assert!((v(rod).a(x) - (s * x).cos()).abs() < 1e-12);
            }
            assert_eq!(v(rod).a(1.0), 0.0);
            assert!(v(rod).a_prime(0.0).abs() < 1e-12);
        }
        for (k, (_, rod)) in rod_dirichlet_dirichlet::<f64>(5).into_iter().enumerate() {
            let s = std::f64::consts::PI * (k + 1) as f64;
            for x in [0.0, 0.3, 0.77, 1.0] {
                assert!((v(rod).a(x) - (s * x).sin()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_section_examples() {
        let pi = std::f64::consts::PI;
        let g = make_geometry(2, CrossSection::Interval { c: -pi / 2.0, d: pi / 2.0 }).unwrap();
        let v: Vec<f64> = cross_section_dirichlet(&g, 4).iter().map(|m| m.0).collect();
        for (a, b) in v.iter().zip([1.0, 4.0, 9.0, 16.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let g = make_geometry(2, CrossSection::Interval { c: -1.0, d: 1.0 }).unwrap();
        for (k, m) in cross_section_dirichlet(&g, 5).iter().enumerate() {
            assert!((m.0 - ((k + 1) as f64 * pi / 2.0).powi(2)).abs() < 1e-12);
            // Full-interval sine on both halves.
            let u = LimitEigenvector { space: Space::Infinite, measure: 2.0, rod: RodPart::zero(), cross: m.2 };
            for x in [-0.9, -0.2, 0.0, 0.4, 0.95] {
                let expect = ((k + 1) as f64 * pi * (x + 1.0) / 2.0).sin();
                assert!((u.b(&[x]) - expect).abs() < 1e-12);
            }
        }
        let g = make_geometry(3, CrossSection::Rect { wx: 0.5, wy: 0.5 }).unwrap();
        let r = cross_section_dirichlet(&g, 3);
        assert!((r[0].0 - 2.0 * pi * pi).abs() < 1e-12);
        assert!((r[1].0 - 5.0 * pi * pi).abs() < 1e-12 && (r[2].0 - 5.0 * pi * pi).abs() < 1e-12);
    }

    #[test]
    fn split_intervals_vanish_at_the_origin() {
        for (_, _, part) in split_interval_dirichlet::<f64>(-1.0, 2.0, 6) {
            let u = LimitEigenvector { space: Space::Zero, measure: 3.0, rod: RodPart::zero(), cross: part };
            assert!(u.b(&[0.0]).abs() < 1e-14 && u.b(&[1e-300]).abs() < 1e-14);
            assert_eq!(u.b(&[-1.0]), 0.0);
            assert!(u.b(&[2.0]).abs() < 1e-15);
        }
    }
}
