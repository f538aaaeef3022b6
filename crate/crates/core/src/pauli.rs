//! Pauli matrices and ladder operators in the `{|0>, |1>}` basis, with
//! `sigma_z |0> = |0>`.

use num_complex::Complex;

use crate::scalar::{CMatrix, Real};

fn m2<T: Real>(a: [(f64, f64); 4]) -> CMatrix<T> {
    let c = |(r, i): (f64, f64)| Complex::new(crate::scalar::lit::<T>(r), crate::scalar::lit::<T>(i));
    CMatrix::from_row_slice(2, 2, &[c(a[0]), c(a[1]), c(a[2]), c(a[3])])
}

pub fn x<T: Real>() -> CMatrix<T> {
    m2([(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)])
}

pub fn y<T: Real>() -> CMatrix<T> {
    m2([(0.0, 0.0), (0.0, -1.0), (0.0, 1.0), (0.0, 0.0)])
}

pub fn z<T: Real>() -> CMatrix<T> {
    m2([(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)])
}

/// `sigma_+ = |0><1|`, so that `[sigma_+, sigma_-] = sigma_z`.
pub fn plus<T: Real>() -> CMatrix<T> {
    m2([(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)])
}

pub fn minus<T: Real>() -> CMatrix<T> {
    m2([(0.0, 0.0), (0.0, 0.0), (1.0, 0.0), (0.0, 0.0)])
}
