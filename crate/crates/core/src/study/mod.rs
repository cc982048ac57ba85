//! Convergence experiments: the finite-`n` pencils along a schedule compared
//! with the limit spectrum of the regime.

mod corrector;
mod matching;

use rayon::prelude::*;
use thiserror::Error;

use crate::assembly::{build_pencil, AssemblyError, Pencil};
use crate::eigensolve::{eigenvalue_bound, EigenOptions, Spectrum};
use crate::geometry::{make_geometry, make_schedule, CrossSection, Geometry, GeometryError, Regime, RegimeSchedule, ThinParams};
use crate::limit::{gathered_spectrum, LimitError, LimitSpectrum};
use crate::mesh::{make_mesh, ungraded_origin_width, Grading, Levels, Mesh, MeshError};
use crate::scalar::Real;

pub use corrector::{b_scale, cluster_angle, corrector_check, interpolate_limit, orthonormality_check, CorrectorNorms};
pub use matching::{match_spectra, window_count, MatchedPair, WindowCount};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StudyError {
    #[error("discrete eigenvalues are not ascending at position {index}")]
    OrderViolation { index: usize },
    #[error("limit eigenvalue {value} has multiplicity {multiplicity}; compared by subspace instead")]
    ClusterSkipped { value: f64, multiplicity: usize },
    #[error("need {needed} eigenvalues, have {have}")]
    TooFewValues { needed: usize, have: usize },
    #[error("k must be at least 1")]
    EmptyRequest,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error("eigensolver: {0}")]
    Solver(String),
}

/// Mesh levels as a function of `n`: `m = clamp(2^(n + offset), min_cells, max_cells)`
/// cells per axis, with the `Omega^b` cross-section graded geometrically
/// toward `0'` until the origin cells are no wider than `r` times the base width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshPolicy {
    pub min_cells: usize,
    pub offset: usize,
    pub max_cells: usize,
    /// Grading ratio; `1` disables grading.
    pub grading_ratio: f64,
}

impl Default for MeshPolicy {
    fn default() -> Self {
        Self { min_cells: 8, offset: 1, max_cells: 256, grading_ratio: 0.5 }
    }
}

impl MeshPolicy {
    pub fn cells_for(&self, n: usize) -> usize {
        let m = 1usize.checked_shl((n + self.offset) as u32).filter(|&m| m > 0).unwrap_or(usize::MAX);
        m.max(self.min_cells).min(self.max_cells.max(self.min_cells))
    }

    pub fn levels_for(&self, n: usize) -> Levels {
        Levels::uniform(self.cells_for(n))
    }

    pub fn grading_for<T: Real>(&self, geometry: &Geometry<T>, levels: Levels, r: T) -> Grading<T> {
        let ratio = T::lit(self.grading_ratio);
        if ratio >= T::one() {
            return Grading::none();
        }
        let base = ungraded_origin_width(geometry, levels.m_omega);
        Grading::reaching(base, r * base, ratio)
    }
}

/// Tolerances shared by the study and the acceptance checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative slack in `lambda_{n,k} <= 2^k k^2 pi^2`.
    pub bound_slack: f64,
    /// Half-width of the multiplicity window, relative to the limit value.
    pub window: f64,
    pub orthonormality: f64,
    /// Final-`n` error for `k = 1`, relative to `lambda_1`.
    pub final_error: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { bound_slack: 1e-12, window: 0.02, orthonormality: 1e-8, final_error: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig<T> {
    pub dim: usize,
    pub omega: CrossSection<T>,
    pub regime: Regime<T>,
    pub r0: T,
    pub rho: T,
    pub first: usize,
    pub count: usize,
    /// Number of eigenvalues compared (multiplicity-expanded).
    pub k: usize,
    pub mesh: MeshPolicy,
    pub solver: EigenOptions<T>,
    pub tolerances: Tolerances,
}

impl<T: Real> Default for StudyConfig<T> {
    /// `N = 2`, `omega = (-1, 1)`, `q = 1`, `r_n = 2^-n` for `n = 2..5`, four eigenvalues.
    fn default() -> Self {
        Self {
            dim: 2,
            omega: CrossSection::Interval { c: -T::one(), d: T::one() },
            regime: Regime::Finite(T::one()),
            r0: T::one(),
            rho: T::lit(0.5),
            first: 2,
            count: 4,
            k: 4,
            mesh: MeshPolicy::default(),
            solver: EigenOptions::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl<T: Real> StudyConfig<T> {
    pub fn geometry(&self) -> Result<Geometry<T>, StudyError> {
        Ok(make_geometry(self.dim, self.omega)?)
    }

    pub fn schedule(&self) -> Result<RegimeSchedule<T>, StudyError> {
        Ok(make_schedule(self.regime, &self.geometry()?, self.r0, self.rho, self.first, self.count)?)
    }

    /// Eigenpairs computed per member: `k` plus a margin for the windows.
    pub fn eigenpair_count(&self) -> usize {
        self.k + 2
    }
}

/// Mesh, pencil and eigenpairs of one member of the sequence.
#[derive(Debug, Clone)]
pub struct MemberSolution<T> {
    pub n: usize,
    pub mesh: Mesh<T>,
    pub pencil: Pencil<T>,
    pub spectrum: Spectrum<T>,
}

pub fn mesh_for<T: Real>(policy: &MeshPolicy, geometry: &Geometry<T>, n: usize, params: &ThinParams<T>) -> Result<Mesh<T>, StudyError> {
    let levels = policy.levels_for(n);
    let grading = policy.grading_for(geometry, levels, params.r);
    Ok(make_mesh(geometry, levels, grading)?)
}

pub fn solve_member<T: Real>(
    config: &StudyConfig<T>,
    geometry: &Geometry<T>,
    n: usize,
    params: &ThinParams<T>,
    nev: usize,
) -> Result<MemberSolution<T>, StudyError> {
    let mesh = mesh_for(&config.mesh, geometry, n, params)?;
    let pencil = build_pencil(&mesh, params)?;
    let nev = nev.min(pencil.order());
    let spectrum = pencil.smallest_eigenpairs(nev, &config.solver).map_err(|e| StudyError::Solver(e.to_string()))?;
    Ok(MemberSolution { n, mesh, pencil, spectrum })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord<T> {
    pub n: usize,
    pub params: ThinParams<T>,
    pub levels: Levels,
    pub mesh_signature: String,
    pub dofs: usize,
    /// `lambda_{n,1..}` as computed (at least `k` when complete).
    pub values: Vec<T>,
    pub pairs: Vec<MatchedPair<T>>,
    /// Per position `k`; `None` where the limit value is multiple.
    pub correctors: Vec<Option<CorrectorNorms<T>>>,
    pub bound_ok: Vec<bool>,
    pub orthonormality: T,
    /// One per limit entry fully inside the first `k` positions.
    pub windows: Vec<WindowCount<T>>,
    /// `(entry, largest principal angle)` for multiple limit values.
    pub cluster_angles: Vec<(usize, T)>,
    /// Reason the record is incomplete, if it is.
    pub failure: Option<String>,
}

impl<T: Real> StudyRecord<T> {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    fn failed(n: usize, params: ThinParams<T>, levels: Levels, reason: String) -> Self {
        Self {
            n,
            params,
            levels,
            mesh_signature: String::new(),
            dofs: 0,
            values: Vec::new(),
            pairs: Vec::new(),
            correctors: Vec::new(),
            bound_ok: Vec::new(),
            orthonormality: T::nan(),
            windows: Vec::new(),
            cluster_angles: Vec::new(),
            failure: Some(reason),
        }
    }
}

/// Least-squares slope of `log e` against `log r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub k: usize,
    pub alpha: Option<f64>,
    pub points: usize,
}

pub fn fit_rate(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(r, e)| *r > 0.0 && *e > 0.0).map(|(r, e)| (r.ln(), e.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let (mx, my) = (logs.iter().map(|p| p.0).sum::<f64>() / n, logs.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport<T> {
    pub config: StudyConfig<T>,
    pub limit: LimitSpectrum<T>,
    pub records: Vec<StudyRecord<T>>,
    pub rates: Vec<RateFit>,
}

impl<T: Real> StudyReport<T> {
    /// `(n, e_{n,k})` over the complete records.
    pub fn errors(&self, k: usize) -> Vec<(usize, T)> {
        self.records
            .iter()
            .filter_map(|rec| rec.pairs.get(k - 1).map(|p| (rec.n, p.error)))
            .collect()
    }

    pub fn bounds_ok(&self) -> bool {
        self.records.iter().all(|rec| rec.bound_ok.iter().all(|&b| b))
    }

    pub fn warnings(&self) -> Vec<String> {
        self.records
            .iter()
            .filter_map(|rec| rec.failure.as_ref().map(|f| format!("n = {}: {f}", rec.n)))
            .collect()
    }
}

/// `lambda_k <= 2^k k^2 pi^2 (1 + slack)` for each 1-based position.
pub fn bound_flags<T: Real>(values: &[T], slack: f64) -> Vec<bool> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| v <= eigenvalue_bound::<T>(i + 1) * (T::one() + T::lit(slack)))
        .collect()
}

fn evaluate<T: Real>(
    config: &StudyConfig<T>,
    limit: &LimitSpectrum<T>,
    sol: &MemberSolution<T>,
    params: ThinParams<T>,
) -> Result<StudyRecord<T>, StudyError> {
    let values = sol.spectrum.values.clone();
    let pairs = match_spectra(&values, limit, config.k)?;
    let vectors = &sol.spectrum.vectors;
    let mut correctors = Vec::with_capacity(pairs.len());
    let mut cluster_angles = Vec::new();
    for p in &pairs {
        let entry = &limit.entries[p.entry];
        if entry.multiplicity == 1 {
            let norms = corrector_check(&sol.mesh, &sol.pencil, &vectors[p.k - 1], entry, &config.regime)?;
            correctors.push(Some(norms));
        } else {
            correctors.push(None);
            let first = pairs.iter().position(|q| q.entry == p.entry).unwrap_or(0);
            let complete = first + entry.multiplicity <= pairs.len();
            if complete && p.k - 1 == first {
                let cluster = &vectors[first..first + entry.multiplicity];
                cluster_angles.push((p.entry, cluster_angle(&sol.mesh, &sol.pencil, cluster, entry, &config.regime)));
            }
        }
    }
    let frac = T::lit(config.tolerances.window);
    let mut windows = Vec::new();
    for (i, entry) in limit.entries.iter().enumerate() {
        let last = pairs.iter().rposition(|p| p.entry == i);
        let count = pairs.iter().filter(|p| p.entry == i).count();
        if last.is_some() && count == entry.multiplicity {
            windows.push(window_count(&values, entry.value, entry.multiplicity, frac));
        }
    }
    let levels = sol.mesh.levels;
    Ok(StudyRecord {
        n: sol.n,
        params,
        levels,
        mesh_signature: format!(
            "{}x{}x{}/g{}@{}",
            levels.m_omega,
            levels.m_a,
            levels.m_b,
            sol.mesh.grading.origin_cells,
            sol.mesh.grading.ratio
        ),
        dofs: sol.pencil.order(),
        bound_ok: bound_flags(&values, config.tolerances.bound_slack),
        orthonormality: orthonormality_check(vectors, &sol.pencil),
        values,
        pairs,
        correctors,
        windows,
        cluster_angles,
        failure: None,
    })
}

/// Solves every member of the schedule (in parallel), matches against the
/// limit spectrum and fits empirical rates. A failing member yields an
/// incomplete record; the others proceed.
pub fn run_convergence_study<T: Real>(config: &StudyConfig<T>) -> Result<StudyReport<T>, StudyError> {
    if config.k == 0 {
        return Err(StudyError::EmptyRequest);
    }
    let geometry = config.geometry()?;
    let schedule = config.schedule()?;
    let limit = gathered_spectrum(config.regime, &geometry, config.k)?;
    let records: Vec<StudyRecord<T>> = schedule
        .entries()
        .par_iter()
        .map(|&(n, params)| {
            let levels = config.mesh.levels_for(n);
            solve_member(config, &geometry, n, &params, config.eigenpair_count())
                .and_then(|sol| evaluate(config, &limit, &sol, params))
                .unwrap_or_else(|e| StudyRecord::failed(n, params, levels, e.to_string()))
        })
        .collect();
    let rates = (1..=config.k)
        .map(|k| {
            let points: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|rec| rec.pairs.get(k - 1).map(|p| (rec.params.r.as_f64(), p.error.as_f64())))
                .collect();
            RateFit { k, alpha: fit_rate(&points), points: points.len() }
        })
        .collect();
    Ok(StudyReport { config: config.clone(), limit, records, rates })
}
