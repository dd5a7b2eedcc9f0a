//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All estimators are written once against [`Real`] and monomorphized for
//! `f32` and `f64`. Data are complex throughout; real signals are the special
//! case of a zero imaginary part.

use nalgebra::{ComplexField, DMatrix, DVector, RealField};
use num_traits::ToPrimitive;
use rustfft::FftNum;

pub use nalgebra::Complex;

/// Real floating-point scalar usable by the estimators and the FFT backend.
pub trait Real: RealField + FftNum + ToPrimitive + Copy {
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn eps() -> Self {
        Self::default_epsilon()
    }
}

impl<T> Real for T where T: RealField + FftNum + ToPrimitive + Copy {}

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

#[inline]
pub(crate) fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `exp(i * theta)`.
#[inline]
pub(crate) fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(ComplexField::cos(theta), ComplexField::sin(theta))
}

#[inline]
pub(crate) fn cabs<T: Real>(z: Complex<T>) -> T {
    ComplexField::modulus(z)
}

pub(crate) fn two_pi<T: Real>() -> T {
    T::two_pi()
}

/// Largest entry modulus of a complex matrix.
pub(crate) fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

pub(crate) fn is_finite<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
