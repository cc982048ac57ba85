//! Exact limit spectra for the three volume-ratio regimes.
//!
//! For `N = 2` with a finite ratio the rod and the cross-section stay
//! coupled through the junction and the eigenvalues solve a transcendental
//! equation ([`junction`]). In every other case the limit problem splits
//! into closed-form branches ([`branches`]) whose eigenvalues are gathered,
//! adding multiplicities where values coincide.

pub mod branches;
pub mod junction;
pub mod vector;

use std::fmt;

use thiserror::Error;

use crate::geometry::{CrossSection, Geometry, Regime};
use crate::scalar::Real;

pub use branches::{cross_section_dirichlet, rod_dirichlet_dirichlet, rod_neumann_dirichlet, split_interval_dirichlet};
pub use junction::{CoupledRoot, JunctionProblem};
pub use vector::{limit_inner_products, CrossPart, LimitEigenvector, RodPart, Space};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("root bracket [{lo}, {hi}] could not be certified")]
    RootLoss { lo: f64, hi: f64 },
    #[error("eigenvectors from different spaces: {left:?} vs {right:?}")]
    RegimeMismatch { left: Space, right: Space },
    #[error("{0}")]
    BadInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    RodNd,
    RodDd,
    Cross,
    CrossLeft,
    CrossRight,
    Coupled,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::RodNd => "ROD_ND",
            Branch::RodDd => "ROD_DD",
            Branch::Cross => "CROSS",
            Branch::CrossLeft => "CROSS_LEFT",
            Branch::CrossRight => "CROSS_RIGHT",
            Branch::Coupled => "COUPLED",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitEigenvalue<T> {
    pub value: T,
    pub multiplicity: usize,
    /// Distinct contributing branches.
    pub branches: Vec<Branch>,
    /// Orthonormal eigenvectors, one per unit of multiplicity.
    pub vectors: Vec<LimitEigenvector<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSpectrum<T> {
    pub entries: Vec<LimitEigenvalue<T>>,
    pub regime: Regime<T>,
    pub geometry: Geometry<T>,
}

impl<T: Real> LimitSpectrum<T> {
    pub fn values(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.multiplicity).collect()
    }

    /// Values repeated by multiplicity.
    pub fn expanded(&self) -> Vec<T> {
        self.entries.iter().flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity)).collect()
    }

    /// For each multiplicity-expanded position: `(entry index, eigenvector)`.
    pub fn expanded_vectors(&self) -> Vec<(usize, LimitEigenvector<T>)> {
        self.entries.iter().enumerate().flat_map(|(i, e)| e.vectors.iter().map(move |v| (i, *v))).collect()
    }
}

/// Relative tolerance for treating two branch values as one eigenvalue.
pub const MERGE_TOL: f64 = 1e-9;

fn merge<T: Real>(
    mut modes: Vec<(T, Branch, LimitEigenvector<T>)>,
    regime: &Regime<T>,
    k_max: usize,
) -> Vec<LimitEigenvalue<T>> {
    modes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let tol = T::lit(MERGE_TOL);
    let mut out: Vec<LimitEigenvalue<T>> = Vec::new();
    for (value, branch, v) in modes {
        let v = vector::normalized(&v, regime);
        match out.last_mut() {
            Some(last) if (value - last.value).abs() <= tol * last.value.max(T::one()) => {
                last.multiplicity += 1;
                if !last.branches.contains(&branch) {
                    last.branches.push(branch);
                }
                last.vectors.push(v);
            }
            _ => {
                if out.len() == k_max {
                    break;
                }
                out.push(LimitEigenvalue { value, multiplicity: 1, branches: vec![branch], vectors: vec![v] });
            }
        }
    }
    out
}

/// Coupled spectrum for `N = 2` and a finite ratio `q`: the first `k_max`
/// distinct values with eigenvectors orthonormal in the `q`-weighted product.
pub fn coupled_junction_spectrum<T: Real>(
    c: T,
    d: T,
    omega_measure: T,
    q: T,
    k_max: usize,
) -> Result<Vec<LimitEigenvalue<T>>, LimitError> {
    let problem = JunctionProblem::new(c, d, omega_measure, q)?;
    let regime = Regime::Finite(q);
    let roots = problem.roots(k_max)?;
    Ok(roots
        .into_iter()
        .map(|root| {
            let raw: Vec<LimitEigenvector<T>> = root
                .amplitudes
                .iter()
                .map(|amp| LimitEigenvector {
                    space: Space::Coupled,
                    measure: omega_measure,
                    rod: RodPart { amp: amp[0], freq: root.s },
                    cross: CrossPart::Interval { freq: root.s, left: amp[1], right: amp[2], c, d },
                })
                .collect();
            LimitEigenvalue {
                value: root.value,
                multiplicity: root.multiplicity,
                branches: vec![Branch::Coupled],
                vectors: vector::orthonormalized(&raw, &regime),
            }
        })
        .collect())
}

/// Limit spectrum for a regime, truncated to `k_max` distinct values.
pub fn gathered_spectrum<T: Real>(
    regime: Regime<T>,
    geometry: &Geometry<T>,
    k_max: usize,
) -> Result<LimitSpectrum<T>, LimitError> {
    if k_max == 0 {
        return Err(LimitError::BadInput("k_max must be at least 1".into()));
    }
    let space = Space::of(&regime);
    let measure = geometry.measure();
    let rod_mode = |(value, rod): (T, RodPart<T>), branch| {
        (value, branch, LimitEigenvector { space, measure, rod, cross: CrossPart::None })
    };
    let cross_mode = |(value, branch, cross): (T, Branch, CrossPart<T>)| {
        (value, branch, LimitEigenvector { space, measure, rod: RodPart::zero(), cross })
    };
    let entries = match (geometry.omega(), regime) {
        (CrossSection::Rect { .. }, _) => {
            let mut modes: Vec<_> = rod_neumann_dirichlet(k_max).into_iter().map(|m| rod_mode(m, Branch::RodNd)).collect();
            modes.extend(cross_section_dirichlet(geometry, k_max).into_iter().map(cross_mode));
            merge(modes, &regime, k_max)
        }
        (CrossSection::Interval { c, d }, Regime::Finite(q)) => coupled_junction_spectrum(c, d, measure, q, k_max)?,
        (CrossSection::Interval { c, d }, Regime::Zero) => {
            let mut modes: Vec<_> = rod_neumann_dirichlet(k_max).into_iter().map(|m| rod_mode(m, Branch::RodNd)).collect();
            modes.extend(split_interval_dirichlet(c, d, k_max).into_iter().map(cross_mode));
            merge(modes, &regime, k_max)
        }
        (CrossSection::Interval { .. }, Regime::Infinite) => {
            let mut modes: Vec<_> = rod_dirichlet_dirichlet(k_max).into_iter().map(|m| rod_mode(m, Branch::RodDd)).collect();
            modes.extend(cross_section_dirichlet(geometry, k_max).into_iter().map(cross_mode));
            merge(modes, &regime, k_max)
        }
    };
    Ok(LimitSpectrum { entries, regime, geometry: *geometry })
}
