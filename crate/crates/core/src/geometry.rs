//! Cross-sections, thinness parameters and the `(r_n, h_n)` regime schedules.

use std::fmt;

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("the origin is not interior to the cross-section: {0}")]
    NonInteriorOrigin(String),
    #[error("unsupported dimension {0}; expected 2 or 3")]
    BadDimension(usize),
    #[error("cross-section {omega} does not match dimension {dim}")]
    ShapeMismatch { dim: usize, omega: String },
    #[error("invalid schedule parameter {name} = {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("regime violated at index {index}: {reason}")]
    RegimeViolation { index: usize, reason: String },
}

/// Shape of the cross-section `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossSection<T> {
    /// `(c, d)` with `c < 0 < d`, used for `N = 2`.
    Interval { c: T, d: T },
    /// `(-wx, wx) x (-wy, wy)`, used for `N = 3`.
    Rect { wx: T, wy: T },
}

impl<T: Real> fmt::Display for CrossSection<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrossSection::Interval { c, d } => write!(f, "interval({c}, {d})"),
            CrossSection::Rect { wx, wy } => write!(f, "rect({wx}, {wy})"),
        }
    }
}

/// Dimension plus cross-section with its cached measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry<T> {
    dim: usize,
    omega: CrossSection<T>,
    measure: T,
}

impl<T: Real> Geometry<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> CrossSection<T> {
        self.omega
    }

    /// `|omega|`.
    pub fn measure(&self) -> T {
        self.measure
    }

    /// Lower and upper bounds of the cross-section along each of its `N - 1` axes.
    pub fn axis_bounds(&self) -> Vec<(T, T)> {
        match self.omega {
            CrossSection::Interval { c, d } => vec![(c, d)],
            CrossSection::Rect { wx, wy } => vec![(-wx, wx), (-wy, wy)],
        }
    }

    /// Whether `x'` lies in the closed cross-section (with slack `tol`).
    pub fn contains_closed(&self, xp: &[T], tol: T) -> bool {
        self.axis_bounds()
            .iter()
            .zip(xp)
            .all(|(&(lo, hi), &x)| x >= lo - tol && x <= hi + tol)
    }
}

/// Builds a validated geometry.
pub fn make_geometry<T: Real>(dim: usize, omega: CrossSection<T>) -> Result<Geometry<T>, GeometryError> {
    if dim != 2 && dim != 3 {
        return Err(GeometryError::BadDimension(dim));
    }
    let measure = match (dim, omega) {
        (2, CrossSection::Interval { c, d }) => {
            if !(c < T::zero() && T::zero() < d) || !c.is_finite() || !d.is_finite() {
                return Err(GeometryError::NonInteriorOrigin(format!("need c < 0 < d, got {omega}")));
            }
            d - c
        }
        (3, CrossSection::Rect { wx, wy }) => {
            if !(wx > T::zero() && wy > T::zero()) || !wx.is_finite() || !wy.is_finite() {
                return Err(GeometryError::NonInteriorOrigin(format!(
                    "half widths must be positive, got {omega}"
                )));
            }
            T::lit(4.0) * wx * wy
        }
        _ => {
            return Err(GeometryError::ShapeMismatch { dim, omega: omega.to_string() });
        }
    };
    Ok(Geometry { dim, omega, measure })
}

/// The pair `(r, h)` for a single member of the sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinParams<T> {
    pub r: T,
    pub h: T,
}

impl<T: Real> ThinParams<T> {
    pub fn new(r: T, h: T) -> Result<Self, GeometryError> {
        let unit = |v: T| v > T::zero() && v < T::one();
        if !unit(r) {
            return Err(GeometryError::BadParameter { name: "r", value: r.as_f64() });
        }
        if !unit(h) {
            return Err(GeometryError::BadParameter { name: "h", value: h.as_f64() });
        }
        Ok(Self { r, h })
    }

    /// Volume ratio `h / r^(N-1)`, the weight of the slab part.
    pub fn volume_ratio(&self, dim: usize) -> T {
        self.h / self.r.powi(dim as i32 - 1)
    }
}

/// Limit of `h_n / r_n^(N-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime<T> {
    Finite(T),
    Zero,
    Infinite,
}

impl<T: Real> Regime<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Finite(_) => "finite",
            Regime::Zero => "zero",
            Regime::Infinite => "infinite",
        }
    }

    /// Weight of the cross-section term in the limit inner products.
    pub fn limit_weight(&self) -> T {
        match *self {
            Regime::Finite(q) => q,
            Regime::Zero | Regime::Infinite => T::one(),
        }
    }

    /// `h` prescribed for a given `r`.
    pub fn thickness_for(&self, dim: usize, r: T) -> T {
        match *self {
            Regime::Finite(q) => q * r.powi(dim as i32 - 1),
            Regime::Zero => r.powi(dim as i32),
            Regime::Infinite if dim == 2 => r.sqrt(),
            Regime::Infinite => r * r * (-r.ln()).sqrt(),
        }
    }
}

/// Geometric sequence `r_n = r0 * rho^n` for `n in first..first + count`,
/// with `h_n` given by the regime.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSchedule<T> {
    pub regime: Regime<T>,
    pub dim: usize,
    pub r0: T,
    pub rho: T,
    pub first: usize,
    pub count: usize,
    entries: Vec<(usize, ThinParams<T>)>,
}

impl<T: Real> RegimeSchedule<T> {
    /// `(n, params)` pairs in increasing `n`.
    pub fn entries(&self) -> &[(usize, ThinParams<T>)] {
        &self.entries
    }

    /// The regime-defining ratio `h_n / r_n^(N-1)` at each entry.
    pub fn ratios(&self) -> Vec<T> {
        self.entries.iter().map(|(_, p)| p.volume_ratio(self.dim)).collect()
    }
}

/// Generates and checks a schedule.
pub fn make_schedule<T: Real>(
    regime: Regime<T>,
    geometry: &Geometry<T>,
    r0: T,
    rho: T,
    first: usize,
    count: usize,
) -> Result<RegimeSchedule<T>, GeometryError> {
    if !(r0 > T::zero() && r0 <= T::one()) {
        return Err(GeometryError::BadParameter { name: "r0", value: r0.as_f64() });
    }
    if !(rho > T::zero() && rho < T::one()) {
        return Err(GeometryError::BadParameter { name: "rho", value: rho.as_f64() });
    }
    if count == 0 {
        return Err(GeometryError::BadParameter { name: "count", value: 0.0 });
    }
    if let Regime::Finite(q) = regime {
        if !(q > T::zero()) || !q.is_finite() {
            return Err(GeometryError::BadParameter { name: "q", value: q.as_f64() });
        }
    }
    let dim = geometry.dim();
    let mut entries = Vec::with_capacity(count);
    for n in first..first + count {
        let r = r0 * rho.powi(n as i32);
        let h = regime.thickness_for(dim, r);
        let params = ThinParams::new(r, h).map_err(|e| GeometryError::RegimeViolation {
            index: n,
            reason: e.to_string(),
        })?;
        check_window(regime, dim, n, &params)?;
        entries.push((n, params));
    }
    let schedule = RegimeSchedule { regime, dim, r0, rho, first, count, entries };
    check_monotone(&schedule)?;
    Ok(schedule)
}

/// Per-index inequalities that the regime relies on.
fn check_window<T: Real>(regime: Regime<T>, dim: usize, n: usize, p: &ThinParams<T>) -> Result<(), GeometryError> {
    let violation = |reason: String| Err(GeometryError::RegimeViolation { index: n, reason });
    let ratio = p.volume_ratio(dim);
    match regime {
        Regime::Zero if ratio >= T::one() => violation(format!("h/r^(N-1) = {ratio} is not small")),
        Regime::Infinite if ratio <= T::one() => violation(format!("h/r^(N-1) = {ratio} is not large")),
        Regime::Infinite if dim == 3 => {
            let lower = p.r * p.r;
            let upper = -p.r * p.r * p.r.ln();
            if lower < p.h && p.h < upper {
                Ok(())
            } else {
                violation(format!(
                    "need r^2 < h < -r^2 log r, got r^2 = {lower}, h = {}, -r^2 log r = {upper}",
                    p.h
                ))
            }
        }
        _ => Ok(()),
    }
}

/// The defining ratio must move toward its target: constant for a finite
/// limit, decreasing toward zero, increasing toward infinity.
fn check_monotone<T: Real>(s: &RegimeSchedule<T>) -> Result<(), GeometryError> {
    let ratios = s.ratios();
    for (i, w) in ratios.windows(2).enumerate() {
        let index = s.entries[i + 1].0;
        let ok = match s.regime {
            Regime::Finite(q) => (w[1] - q).abs() <= (w[0] - q).abs() + T::lit(1e3) * T::epsilon() * q,
            Regime::Zero => w[1] < w[0],
            Regime::Infinite => w[1] > w[0],
        };
        if !ok {
            return Err(GeometryError::RegimeViolation {
                index,
                reason: format!("ratio moved from {} to {} away from its target", w[0], w[1]),
            });
        }
        if s.dim == 3 {
            if let Regime::Infinite = s.regime {
                // h / (-r^2 log r) must shrink along the schedule.
                let frac = |p: &ThinParams<T>| p.h / (-p.r * p.r * p.r.ln());
                if frac(&s.entries[i + 1].1) >= frac(&s.entries[i].1) {
                    return Err(GeometryError::RegimeViolation {
                        index,
                        reason: "h / (-r^2 log r) does not decrease".into(),
                    });
                }
            }
        }
    }
    Ok(())
}
