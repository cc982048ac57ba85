//! Analytic eigenvector descriptors of the limit problems and their inner
//! products, evaluated from closed-form trigonometric integrals.

use crate::geometry::Regime;
use crate::scalar::Real;

use super::LimitError;

/// Function space the eigenvector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    /// Coupled space (finite volume ratio).
    Coupled,
    /// Vanishing volume ratio.
    Zero,
    /// Diverging volume ratio.
    Infinite,
}

impl Space {
    pub fn of<T: Real>(regime: &Regime<T>) -> Self {
        match regime {
            Regime::Finite(_) => Space::Coupled,
            Regime::Zero => Space::Zero,
            Regime::Infinite => Space::Infinite,
        }
    }
}

/// `amp * sin(freq * (1 - x_N))` on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodPart<T> {
    pub amp: T,
    pub freq: T,
}

impl<T: Real> RodPart<T> {
    pub fn zero() -> Self {
        Self { amp: T::zero(), freq: T::one() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossPart<T> {
    None,
    /// `left * sin(freq (x - c))` on `(c, 0)` and `right * sin(freq (d - x))` on `(0, d)`.
    Interval { freq: T, left: T, right: T, c: T, d: T },
    /// `amp * sin(i pi (x + wx) / 2wx) * sin(j pi (y + wy) / 2wy)`.
    Rect { amp: T, i: usize, j: usize, wx: T, wy: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitEigenvector<T> {
    pub space: Space,
    /// `|omega|`.
    pub measure: T,
    pub rod: RodPart<T>,
    pub cross: CrossPart<T>,
}

/// `int_0^len sin(s1 t) sin(s2 t) dt`.
pub fn sin_sin<T: Real>(s1: T, s2: T, len: T) -> T {
    (sinc_integral(s1 - s2, len) - sinc_integral(s1 + s2, len)) / T::lit(2.0)
}

/// `int_0^len cos(s1 t) cos(s2 t) dt`.
pub fn cos_cos<T: Real>(s1: T, s2: T, len: T) -> T {
    (sinc_integral(s1 - s2, len) + sinc_integral(s1 + s2, len)) / T::lit(2.0)
}

/// `int_0^len cos(a t) dt`.
fn sinc_integral<T: Real>(a: T, len: T) -> T {
    let x = a * len;
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        len * (T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0))
    } else {
        x.sin() / a
    }
}

impl<T: Real> LimitEigenvector<T> {
    pub fn scaled(&self, factor: T) -> Self {
        let rod = RodPart { amp: self.rod.amp * factor, ..self.rod };
        let cross = match self.cross {
            CrossPart::None => CrossPart::None,
            CrossPart::Interval { freq, left, right, c, d } => {
                CrossPart::Interval { freq, left: left * factor, right: right * factor, c, d }
            }
            CrossPart::Rect { amp, i, j, wx, wy } => CrossPart::Rect { amp: amp * factor, i, j, wx, wy },
        };
        Self { rod, cross, ..*self }
    }

    /// `u^a(x_N)`.
    pub fn a(&self, x: T) -> T {
        self.rod.amp * (self.rod.freq * (T::one() - x)).sin()
    }

    /// `d u^a / d x_N`.
    pub fn a_prime(&self, x: T) -> T {
        -self.rod.amp * self.rod.freq * (self.rod.freq * (T::one() - x)).cos()
    }

    /// `u^b(x')`.
    pub fn b(&self, xp: &[T]) -> T {
        match self.cross {
            CrossPart::None => T::zero(),
            CrossPart::Interval { freq, left, right, c, d } => {
                let x = xp[0];
                if x <= T::zero() {
                    left * (freq * (x - c)).sin()
                } else {
                    right * (freq * (d - x)).sin()
                }
            }
            CrossPart::Rect { amp, i, j, wx, wy } => {
                let (sx, sy) = rect_freqs(i, j, wx, wy);
                amp * (sx * (xp[0] + wx)).sin() * (sy * (xp[1] + wy)).sin()
            }
        }
    }

    /// Gradient of `u^b`; only the first `N - 1` entries are meaningful.
    pub fn b_grad(&self, xp: &[T]) -> [T; 2] {
        match self.cross {
            CrossPart::None => [T::zero(); 2],
            CrossPart::Interval { freq, left, right, c, d } => {
                let x = xp[0];
                let g = if x <= T::zero() {
                    left * freq * (freq * (x - c)).cos()
                } else {
                    -right * freq * (freq * (d - x)).cos()
                };
                [g, T::zero()]
            }
            CrossPart::Rect { amp, i, j, wx, wy } => {
                let (sx, sy) = rect_freqs(i, j, wx, wy);
                let (ux, uy) = (sx * (xp[0] + wx), sy * (xp[1] + wy));
                [amp * sx * ux.cos() * uy.sin(), amp * sy * ux.sin() * uy.cos()]
            }
        }
    }
}

fn rect_freqs<T: Real>(i: usize, j: usize, wx: T, wy: T) -> (T, T) {
    let pi = T::PI();
    (pi * T::from_usize_lossy(i) / (wx + wx), pi * T::from_usize_lossy(j) / (wy + wy))
}

fn rod_products<T: Real>(u: &RodPart<T>, v: &RodPart<T>) -> (T, T) {
    let one = T::one();
    let amp = u.amp * v.amp;
    (amp * sin_sin(u.freq, v.freq, one), amp * u.freq * v.freq * cos_cos(u.freq, v.freq, one))
}

fn cross_products<T: Real>(u: &CrossPart<T>, v: &CrossPart<T>) -> (T, T) {
    match (u, v) {
        (
            CrossPart::Interval { freq: su, left: lu, right: ru, c, d },
            CrossPart::Interval { freq: sv, left: lv, right: rv, .. },
        ) => {
            let (len_l, len_r) = (-*c, *d);
            let mass = *lu * *lv * sin_sin(*su, *sv, len_l) + *ru * *rv * sin_sin(*su, *sv, len_r);
            let energy =
                *su * *sv * (*lu * *lv * cos_cos(*su, *sv, len_l) + *ru * *rv * cos_cos(*su, *sv, len_r));
            (mass, energy)
        }
        (
            CrossPart::Rect { amp: au, i: iu, j: ju, wx, wy },
            CrossPart::Rect { amp: av, i: iv, j: jv, .. },
        ) => {
            let (sxu, syu) = rect_freqs(*iu, *ju, *wx, *wy);
            let (sxv, syv) = rect_freqs(*iv, *jv, *wx, *wy);
            let (lx, ly) = (*wx + *wx, *wy + *wy);
            let (mx, my) = (sin_sin(sxu, sxv, lx), sin_sin(syu, syv, ly));
            let (kx, ky) = (sxu * sxv * cos_cos(sxu, sxv, lx), syu * syv * cos_cos(syu, syv, ly));
            let amp = *au * *av;
            (amp * mx * my, amp * (kx * my + mx * ky))
        }
        _ => (T::zero(), T::zero()),
    }
}

/// `([u, v], alpha(u, v))`: the weighted `L^2` and energy products, with the
/// cross-section weight `q` in the coupled case and `1` otherwise.
pub fn limit_inner_products<T: Real>(
    u: &LimitEigenvector<T>,
    v: &LimitEigenvector<T>,
    regime: &Regime<T>,
) -> Result<(T, T), LimitError> {
    let space = Space::of(regime);
    if u.space != space || v.space != space {
        return Err(LimitError::RegimeMismatch { left: u.space, right: if u.space != space { space } else { v.space } });
    }
    let weight = regime.limit_weight();
    let (ma, ea) = rod_products(&u.rod, &v.rod);
    let (mb, eb) = cross_products(&u.cross, &v.cross);
    Ok((u.measure * ma + weight * mb, u.measure * ea + weight * eb))
}

/// Rescales `v` to unit weighted mass.
pub(crate) fn normalized<T: Real>(v: &LimitEigenvector<T>, regime: &Regime<T>) -> LimitEigenvector<T> {
    let (mass, _) = limit_inner_products(v, v, regime).expect("same space");
    v.scaled(T::one() / mass.sqrt())
}

/// Gram-Schmidt in the weighted mass product.
pub(crate) fn orthonormalized<T: Real>(vs: &[LimitEigenvector<T>], regime: &Regime<T>) -> Vec<LimitEigenvector<T>> {
    let mut out: Vec<LimitEigenvector<T>> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = *v;
        for _ in 0..2 {
            for e in &out {
                let (p, _) = limit_inner_products(&w, e, regime).expect("same space");
                w = subtract(&w, &e.scaled(p));
            }
        }
        out.push(normalized(&w, regime));
    }
    out
}

/// `u - v` for descriptors sharing frequencies.
fn subtract<T: Real>(u: &LimitEigenvector<T>, v: &LimitEigenvector<T>) -> LimitEigenvector<T> {
    let rod = RodPart { amp: u.rod.amp - v.rod.amp, freq: u.rod.freq };
    let cross = match (u.cross, v.cross) {
        (CrossPart::Interval { freq, left, right, c, d }, CrossPart::Interval { left: l2, right: r2, .. }) => {
            CrossPart::Interval { freq, left: left - l2, right: right - r2, c, d }
        }
        (CrossPart::Rect { amp, i, j, wx, wy }, CrossPart::Rect { amp: a2, .. }) => {
            CrossPart::Rect { amp: amp - a2, i, j, wx, wy }
        }
        (x, _) => x,
    };
    LimitEigenvector { rod, cross, ..*u }
}
