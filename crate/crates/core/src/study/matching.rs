//! Pairing of discrete and limit eigenvalues.

use crate::limit::LimitSpectrum;
use crate::scalar::Real;

use super::StudyError;

/// One position `k` (1-based, multiplicity-expanded) of the pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair<T> {
    pub k: usize,
    pub limit: T,
    pub discrete: T,
    pub error: T,
    /// Index of the limit entry (distinct value) this position belongs to.
    pub entry: usize,
    pub multiplicity: usize,
}

/// Pairs the first `k` ascending discrete values with the multiplicity-expanded
/// limit values in order; a limit cluster of size `m` takes `m` consecutive values.
pub fn match_spectra<T: Real>(
    discrete: &[T],
    limit: &LimitSpectrum<T>,
    k: usize,
) -> Result<Vec<MatchedPair<T>>, StudyError> {
    if let Some(i) = discrete.windows(2).position(|w| w[1] < w[0]) {
        return Err(StudyError::OrderViolation { index: i + 1 });
    }
    let expanded: Vec<(usize, T, usize)> = limit
        .entries
        .iter()
        .enumerate()
        .flat_map(|(i, e)| std::iter::repeat_n((i, e.value, e.multiplicity), e.multiplicity))
        .collect();
    let have = discrete.len().min(expanded.len());
    if have < k {
        return Err(StudyError::TooFewValues { needed: k, have });
    }
    Ok(discrete
        .iter()
        .zip(&expanded)
        .take(k)
        .enumerate()
        .map(|(i, (&d, &(entry, value, multiplicity)))| MatchedPair {
            k: i + 1,
            limit: value,
            discrete: d,
            error: (d - value).abs(),
            entry,
            multiplicity,
        })
        .collect())
}

/// Discrete values inside `[value (1 - frac), value (1 + frac)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCount<T> {
    pub value: T,
    pub multiplicity: usize,
    pub count: usize,
    /// The computed values extend past the window, so `count` is exact.
    pub closed: bool,
}

pub fn window_count<T: Real>(discrete: &[T], value: T, multiplicity: usize, frac: T) -> WindowCount<T> {
    let (lo, hi) = (value * (T::one() - frac), value * (T::one() + frac));
    WindowCount {
        value,
        multiplicity,
        count: discrete.iter().filter(|&&x| x >= lo && x <= hi).count(),
        closed: discrete.last().is_some_and(|&x| x > hi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_geometry, CrossSection, Regime};
    use crate::limit::gathered_spectrum;

    fn q1() -> LimitSpectrum<f64> {
        let g = make_geometry(2, CrossSection::Interval { c: -1.0, d: 1.0 }).unwrap();
        gathered_spectrum(Regime::Finite(1.0), &g, 4).unwrap()
    }

    #[test]
    fn in_order_pairing() {
        let limit = q1();
        let pi2 = std::f64::consts::PI.powi(2);
        let expect = [pi2 / 4.0, pi2, pi2, 9.0 * pi2 / 4.0];
        assert_eq!(limit.expanded()[..4].len(), 4);
        for (a, b) in limit.expanded().iter().zip(expect) {
            assert!((a - b).abs() < 1e-10 * b);
        }
        let d = [2.47, 9.85, 9.92];
        let pairs = match_spectra(&d, &limit, 3).unwrap();
        let errs: Vec<f64> = pairs.iter().map(|p| p.error).collect();
        assert!((errs[0] - (2.47 - pi2 / 4.0)).abs() < 1e-12);
        assert!((errs[1] - (pi2 - 9.85)).abs() < 1e-12 && (errs[2] - (9.92 - pi2)).abs() < 1e-12);
        assert_eq!((pairs[1].entry, pairs[2].entry, pairs[2].multiplicity), (1, 1, 2));
    }

    #[test]
    fn identical_lists_have_zero_error() {
        let limit = q1();
        let d = limit.expanded();
        assert!(match_spectra(&d, &limit, d.len()).unwrap().iter().all(|p| p.error == 0.0));
    }

    #[test]
    fn rejects_unsorted_and_short_input() {
        let limit = q1();
        assert_eq!(match_spectra(&[3.0, 2.0], &limit, 2), Err(StudyError::OrderViolation { index: 1 }));
        assert!(matches!(match_spectra(&[1.0], &limit, 2), Err(StudyError::TooFewValues { .. })));
    }

    #[test]
    fn windows() {
        let w = window_count(&[1.0, 9.8, 9.9, 10.0, 12.0], 9.87, 2, 0.02);
        assert_eq!((w.count, w.closed), (3, true));
        assert!(!window_count(&[9.8], 9.87, 1, 0.02).closed);
    }
}
