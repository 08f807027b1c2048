//! Scalar abstraction shared by every geometric routine.
//!
//! All numerical code is written against [`Real`], which is implemented for
//! `f32` and `f64`. Tolerances quoted throughout the crate assume `f64`.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub use num_complex::Complex;

pub trait Real:
    'static
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number with a [`Real`] component type.
pub type C<T> = Complex<T>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn imag_unit<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let two_pi = T::TAU();
    let mut t = theta % two_pi;
    if t <= -T::PI() {
        t += two_pi;
    } else if t > T::PI() {
        t -= two_pi;
    }
    t
}

/// Maximum of a sequence of scalars, zero for an empty sequence.
pub fn max_of<T: Real, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().fold(T::zero(), |acc, x| {
        if x.is_nan() || acc.is_nan() {
            T::nan()
        } else {
            acc.max(x)
        }
    })
}

/// Lower bound on per-vertex residual scales, relative to the largest one.
pub const SCALE_FLOOR: f64 = 1e-4;

/// Max of `residual / max(scale, SCALE_FLOOR * largest scale)` over
/// `(residual, scale)` pairs, so that places where a field vanishes do not
/// compare rounding noise with itself.
pub fn relative_max<T: Real>(sums: &[(T, T)]) -> T {
    let top = max_of(sums.iter().map(|s| s.1));
    if !(top > T::zero()) {
        return T::zero();
    }
    let floor = top * T::lit(SCALE_FLOOR);
    max_of(sums.iter().map(|&(r, n)| r / n.max(floor)))
}
