//! Spectra of the Laplacian on a thin two-cylinder multidomain: a rod
//! `r omega x (0, 1)` standing on a slab `omega x (-h, 0)`, with Dirichlet
//! conditions on the rod top and the slab's lateral boundary.
//!
//! The finite-`(r, h)` problem is solved by Q1 finite elements on the
//! rescaled fixed domain and compared with the exact limit spectra of the
//! three volume-ratio regimes `h / r^(N-1) -> q`, `0` or `infinity`.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix `f64`.

pub mod assembly;
pub mod cholesky;
pub mod cli;
pub mod dense;
pub mod eigensolve;
pub mod geometry;
pub mod limit;
pub mod mesh;
pub mod scalar;
pub mod sparse;
pub mod study;
pub mod verify;

pub use assembly::{build_constraints, build_pencil, AssemblyError};
pub use eigensolve::{dense_oracle, eigenvalue_bound, smallest_eigenpairs, EigenError, EigenOptions};
pub use geometry::{make_geometry, make_schedule, CrossSection, GeometryError, Regime};
pub use limit::{gathered_spectrum, limit_inner_products, Branch, LimitError};
pub use mesh::{make_mesh, Grading, Levels, MeshError};
pub use scalar::Real;
pub use study::{corrector_check, match_spectra, orthonormality_check, run_convergence_study, StudyError};

pub type Geometry = geometry::Geometry<f64>;
pub type ThinParams = geometry::ThinParams<f64>;
pub type RegimeSchedule = geometry::RegimeSchedule<f64>;
pub type Mesh = mesh::Mesh<f64>;
pub type Pencil = assembly::Pencil<f64>;
pub type Spectrum = eigensolve::Spectrum<f64>;
pub type LimitSpectrum = limit::LimitSpectrum<f64>;
pub type LimitEigenvector = limit::LimitEigenvector<f64>;
pub type StudyConfig = study::StudyConfig<f64>;
pub type StudyReport = study::StudyReport<f64>;
pub type CorrectorNorms = study::CorrectorNorms<f64>;
