use num_complex::Complex64;
use num_traits::Zero;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Field value type: `f64` for states and sources, `Complex64` for transforms.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign<f64>
    + Send
    + Sync
    + 'static
{
    fn norm_sqr(self) -> f64;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}
