//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar used for amplitudes and tolerances (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Validation tolerance used when a constructor is not given one.
    fn default_tolerance() -> Self;

    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    /// Widens to `f64` for sampling and reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("representable count")
    }
}

impl Real for f64 {
    fn default_tolerance() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn default_tolerance() -> Self {
        1e-4
    }
}

/// Complex amplitude.
pub type C<R> = Complex<R>;
/// Dense complex matrix (column-major storage, row-major logical indexing via `(row, col)`).
pub type CMatrix<R> = DMatrix<Complex<R>>;
/// Dense complex column vector.
pub type CVector<R> = DVector<Complex<R>>;

#[inline]
pub fn c<R: Real>(re: f64, im: f64) -> C<R> {
    Complex::new(R::of(re), R::of(im))
}

#[inline]
pub fn re<R: Real>(x: R) -> C<R> {
    Complex::new(x, R::zero())
}

/// Modulus `|z|`.
#[inline]
pub fn cabs<R: Real>(z: C<R>) -> R {
    z.norm_sqr().sqrt()
}
