//! Small dense complex linear-algebra helpers: norms, commutators and the
//! matrix exponential used by the propagators.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::scalar::{lit, re, CMatrix, Real};

pub fn zeros<T: Real>(dim: usize) -> CMatrix<T> {
    DMatrix::from_element(dim, dim, Complex::new(T::zero(), T::zero()))
}

pub fn identity<T: Real>(dim: usize) -> CMatrix<T> {
    DMatrix::identity(dim, dim)
}

pub fn frobenius_sq<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

pub fn frobenius<T: Real>(m: &CMatrix<T>) -> T {
    frobenius_sq(m).sqrt()
}

/// Induced 1-norm (maximum absolute column sum).
pub fn one_norm<T: Real>(m: &CMatrix<T>) -> T {
    let mut best = T::zero();
    for col in m.column_iter() {
        let s = col.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr().sqrt());
        if s > best {
            best = s;
        }
    }
    best
}

/// `[a, b] = ab - ba`.
pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

pub fn adjoint<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.adjoint()
}

/// `||m - m^dagger||_F`.
pub fn hermitian_defect<T: Real>(m: &CMatrix<T>) -> T {
    frobenius(&(m - m.adjoint()))
}

/// `||u^dagger u - 1||_F`.
pub fn unitarity_defect<T: Real>(u: &CMatrix<T>) -> T {
    let n = u.nrows();
    frobenius(&(u.adjoint() * u - identity::<T>(n)))
}

pub fn trace<T: Real>(m: &CMatrix<T>) -> Complex<T> {
    m.diagonal().iter().fold(re(T::zero()), |acc, z| acc + z)
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 1/2, the
/// series is summed until the next term drops below machine precision
/// relative to the partial sum, and the result is squared `s` times.
pub fn expm<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.nrows();
    let norm = one_norm(a);
    let half = lit::<T>(0.5);
    let mut squarings = 0u32;
    let mut scale = T::one();
    let mut scaled_norm = norm;
    while scaled_norm > half {
        scaled_norm *= half;
        scale *= half;
        squarings += 1;
    }
    let x = a * re(scale);
    let eps = T::default_epsilon();
    let mut sum = identity::<T>(n);
    let mut term = identity::<T>(n);
    for k in 1..=40u32 {
        term = &term * &x * re(T::one() / lit::<T>(k as f64));
        sum += &term;
        if frobenius(&term) <= eps * frobenius(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i * tau * h)` for a hermitian (or general) generator `h`.
pub fn exp_minus_i<T: Real>(h: &CMatrix<T>, tau: T) -> CMatrix<T> {
    expm(&(h * Complex::new(T::zero(), -tau)))
}
