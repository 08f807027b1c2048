//! Small fixed-size vector types: real 3-vectors and complex 3-vectors.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y).hypot(self.z)
    }

    /// Returns `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Vector in complex 3-space, the value type of Weierstrass realizations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CVec3<T> {
    pub x: C<T>,
    pub y: C<T>,
    pub z: C<T>,
}

impl<T: Real> CVec3<T> {
    pub fn new(x: C<T>, y: C<T>, z: C<T>) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        let z = C::new(T::zero(), T::zero());
        Self::new(z, z, z)
    }

    pub fn re(self) -> Vec3<T> {
        Vec3::new(self.x.re, self.y.re, self.z.re)
    }

    pub fn im(self) -> Vec3<T> {
        Vec3::new(self.x.im, self.y.im, self.z.im)
    }

    pub fn scale(self, s: C<T>) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    /// Hermitian norm.
    pub fn norm(self) -> T {
        self.re().norm().hypot(self.im().norm())
    }
}

impl<T: Real> Add for CVec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for CVec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for CVec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Signed area of the triangle `(a, b, c)` in the plane, positive when counterclockwise.
pub fn signed_area<T: Real>(a: C<T>, b: C<T>, c: C<T>) -> T {
    let u = b - a;
    let v = c - a;
    (u.re * v.im - u.im * v.re) / T::lit(2.0)
}

/// Circumcenter and circumradius of three points, `None` when collinear.
pub fn circumcircle<T: Real>(a: C<T>, b: C<T>, c: C<T>) -> Option<(C<T>, T)> {
    let b0 = b - a;
    let c0 = c - a;
    let d = T::lit(2.0) * (b0.re * c0.im - b0.im * c0.re);
    if d == T::zero() || !d.is_finite() {
        return None;
    }
    let bn = b0.norm_sqr();
    let cn = c0.norm_sqr();
    let ux = (c0.im * bn - b0.im * cn) / d;
    let uy = (b0.re * cn - c0.re * bn) / d;
    let center = a + C::new(ux, uy);
    let r = ux.hypot(uy);
    Some((center, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_right_handed() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(x.cross(y), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn circumcircle_of_right_triangle() {
        let (c, r) = circumcircle(C::new(0.0, 0.0), C::new(2.0, 0.0), C::new(0.0, 2.0)).unwrap();
        assert!((c - C::new(1.0, 1.0)).norm() < 1e-15);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!(circumcircle(C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(2.0, 0.0)).is_none());
    }

    #[test]
    fn ccw_area_positive() {
        assert!(signed_area(C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 1.0)) > 0.0);
    }
}
