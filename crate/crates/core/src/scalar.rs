//! Scalar abstraction shared by the numerical kernels.
//!
//! The algebra, flow, expansion and propagation code is written against
//! [`Real`], which is satisfied by `f32` and `f64`. Application layers
//! (drive design, lattice models, sweeps) are concrete in `f64`.

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable by the generic kernels.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync {}

/// Dense complex matrix over a real scalar `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts an integer into `T`.
#[inline]
pub fn int<T: Real>(x: i64) -> T {
    T::from_i64(x).expect("integer representable in scalar type")
}

/// `exp(i theta)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Lossy conversion back to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub(crate) fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}
