//! Möbius transformations and their infinitesimal generators.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::geom::{circumcircle, signed_area};
use crate::mesh::OneFormValue;
use crate::packing::CirclePacking;
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MoebiusError {
    #[error("point is mapped to infinity")]
    PoleHit,
    #[error("interpolation points coincide")]
    CoincidentPoints,
    #[error("matrix is singular")]
    Singular,
    #[error("circle {0} passes through the pole of the map")]
    CircleThroughPole(usize),
    #[error("the pole of the map lies inside circle {0}")]
    PoleInsideCircle(usize),
    #[error("image packing is not positively oriented")]
    OrientationReversed,
}

/// `z -> (a z + b) / (c z + d)` normalized to `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap<T> {
    pub a: C<T>,
    pub b: C<T>,
    pub c: C<T>,
    pub d: C<T>,
}

impl<T: Real> MoebiusMap<T> {
    /// Normalizes to determinant one with `Re(a + d) >= 0` (ties broken by `Im`).
    pub fn new(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> Result<Self, MoebiusError> {
        let det = a * d - b * c;
        if det.norm() == T::zero() || !det.norm().is_finite() {
            return Err(MoebiusError::Singular);
        }
        let s = det.sqrt();
        let (mut a, mut b, mut c, mut d) = (a / s, b / s, c / s, d / s);
        let tr = a + d;
        if tr.re < T::zero() || (tr.re == T::zero() && tr.im < T::zero()) {
            a = -a;
            b = -b;
            c = -c;
            d = -d;
        }
        Ok(Self { a, b, c, d })
    }

    pub fn identity() -> Self {
        let one = C::new(T::one(), T::zero());
        let zero = C::new(T::zero(), T::zero());
        Self {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    pub fn translation(w: C<T>) -> Self {
        Self {
            b: w,
            ..Self::identity()
        }
    }

    pub fn determinant(&self) -> C<T> {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, z: C<T>) -> Result<C<T>, MoebiusError> {
        let den = self.c * z + self.d;
        if den.norm() == T::zero() {
            return Err(MoebiusError::PoleHit);
        }
        Ok((self.a * z + self.b) / den)
    }

    /// Derivative `v / (c z + d)^2`.
    pub fn apply_derivative(&self, z: C<T>, v: C<T>) -> Result<C<T>, MoebiusError> {
        let den = self.c * z + self.d;
        if den.norm() == T::zero() {
            return Err(MoebiusError::PoleHit);
        }
        Ok(v / (den * den))
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Self) -> Self {
        Self::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
        .expect("product of invertible maps")
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a).expect("invertible")
    }

    /// The point sent to infinity, if any.
    pub fn pole(&self) -> Option<C<T>> {
        (self.c.norm() > T::zero()).then(|| -self.d / self.c)
    }

    /// The eight real coefficients `(a, b, c, d)` as `re, im` pairs.
    pub fn to_reals(&self) -> [T; 8] {
        [
            self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im, self.d.re, self.d.im,
        ]
    }
}

/// Trace-zero matrix `[[a, b], [c, -a]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InfMoebius<T> {
    pub a: C<T>,
    pub b: C<T>,
    pub c: C<T>,
}

impl<T: Real> InfMoebius<T> {
    pub fn new(a: C<T>, b: C<T>, c: C<T>) -> Self {
        Self { a, b, c }
    }

    pub fn zero() -> Self {
        let z = C::new(T::zero(), T::zero());
        Self::new(z, z, z)
    }

    /// Velocity `-c z^2 + 2 a z + b` of the generated vector field.
    pub fn velocity_at(&self, z: C<T>) -> C<T> {
        -self.c * z * z + self.a * z * T::lit(2.0) + self.b
    }

    /// Matrix-vector product with `(z, 1)`.
    pub fn mul_vec(&self, z: C<T>) -> (C<T>, C<T>) {
        (self.a * z + self.b, self.c * z - self.a)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s)
    }

    pub fn entries(&self) -> [[C<T>; 2]; 2] {
        [[self.a, self.b], [self.c, -self.a]]
    }

    /// Frobenius norm of the matrix.
    pub fn norm(&self) -> T {
        (T::lit(2.0) * self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr()).sqrt()
    }

    /// Six real coordinates `(Re a, Im a, Re b, Im b, Re c, Im c)`.
    pub fn to_reals(&self) -> [T; 6] {
        [
            self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im,
        ]
    }

    pub fn from_reals(x: &[T]) -> Self {
        Self::new(C::new(x[0], x[1]), C::new(x[2], x[3]), C::new(x[4], x[5]))
    }

    /// The six real generators of `sl(2, C)` in the order of [`Self::to_reals`].
    pub fn real_basis() -> [Self; 6] {
        std::array::from_fn(|k| {
            let mut x = [T::zero(); 6];
            x[k] = T::one();
            Self::from_reals(&x)
        })
    }
}

impl<T: Real> Add for InfMoebius<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b, self.c + o.c)
    }
}

impl<T: Real> Sub for InfMoebius<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b, self.c - o.c)
    }
}

impl<T: Real> Neg for InfMoebius<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b, -self.c)
    }
}

impl<T: Real> Mul<T> for InfMoebius<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s)
    }
}

impl<T: Real> OneFormValue<T> for InfMoebius<T> {
    fn zero() -> Self {
        InfMoebius::zero()
    }
    fn magnitude(&self) -> T {
        self.norm()
    }
}

/// The unique infinitesimal Möbius transformation with velocity `v[k]` at `z[k]`.
pub fn fit_inf_moebius<T: Real>(z: [C<T>; 3], v: [C<T>; 3]) -> Result<InfMoebius<T>, MoebiusError> {
    let d01 = z[1] - z[0];
    let d02 = z[2] - z[0];
    let d12 = z[2] - z[1];
    if [d01, d02, d12].iter().any(|d| d.norm() == T::zero()) {
        return Err(MoebiusError::CoincidentPoints);
    }
    // Newton divided differences of the quadratic v(z) = p2 z^2 + p1 z + p0
    let f01 = (v[1] - v[0]) / d01;
    let f12 = (v[2] - v[1]) / d12;
    let p2 = (f12 - f01) / d02;
    let p1 = f01 - p2 * (z[0] + z[1]);
    let p0 = v[0] - p1 * z[0] - p2 * z[0] * z[0];
    Ok(InfMoebius::new(p1 / T::lit(2.0), p0, -p2))
}

/// Image of a packing under a Möbius map, with every circle refitted from
/// three image points.
pub fn moebius_image_packing<T: Real>(
    t: &MoebiusMap<T>,
    p: &CirclePacking<T>,
) -> Result<CirclePacking<T>, MoebiusError> {
    let pole = t.pole();
    let third = T::TAU() / T::lit(3.0);
    let guard = T::lit(1e3) * T::epsilon();
    let mut centers = Vec::with_capacity(p.centers.len());
    let mut radii = Vec::with_capacity(p.radii.len());
    for (v, (&c, &r)) in p.centers.iter().zip(&p.radii).enumerate() {
        if let Some(w) = pole {
            let d = (w - c).norm();
            if (d - r).abs() <= guard * (r + d) {
                return Err(MoebiusError::CircleThroughPole(v));
            }
            if d < r {
                return Err(MoebiusError::PoleInsideCircle(v));
            }
        }
        let img = |k: f64| t.apply(c + C::from_polar(r, third * T::lit(k)));
        let (center, radius) = circumcircle(img(0.0)?, img(1.0)?, img(2.0)?)
            .ok_or(MoebiusError::CircleThroughPole(v))?;
        centers.push(center);
        radii.push(radius);
    }
    let q = CirclePacking::new(p.mesh.clone(), centers, radii);
    let oriented = q
        .mesh
        .faces()
        .iter()
        .all(|&[a, b, c]| signed_area(q.centers[a], q.centers[b], q.centers[c]) > T::zero());
    if !oriented {
        return Err(MoebiusError::OrientationReversed);
    }
    Ok(q)
}
