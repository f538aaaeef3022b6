//! Random test instances.

use num_complex::Complex;
use rand::Rng;

use crate::modes::{FourierOperator, FrequencyBasis, ModeIndex};
use crate::scalar::CMatrix;

/// Random complex matrix with entries uniform in the unit square, scaled by
/// `amp / dim`.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize, amp: f64) -> CMatrix<f64> {
    let s = amp / dim as f64;
    CMatrix::from_fn(dim, dim, |_, _| {
        Complex::new(rng.gen_range(-1.0..1.0) * s, rng.gen_range(-1.0..1.0) * s)
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, amp: f64) -> CMatrix<f64> {
    let x = random_matrix(rng, dim, amp);
    (&x + x.adjoint()) * Complex::new(0.5, 0.0)
}

/// Hermitian two-frequency series with every mode `|m_j| <= width[j]`
/// occupied. Caps follow the default of twice the width.
pub fn random_hermitian_series<R: Rng + ?Sized>(
    rng: &mut R,
    basis: FrequencyBasis<f64>,
    dim: usize,
    width: [i32; 2],
    amp: f64,
) -> FourierOperator<f64> {
    let mut terms = Vec::new();
    for a in -width[0]..=width[0] {
        for b in -width[1]..=width[1] {
            let m = ModeIndex::from([a, b]);
            let neg = -&m;
            if neg < m {
                continue;
            }
            if m.is_zero() {
                terms.push((m, random_hermitian(rng, dim, amp)));
            } else {
                let x = random_matrix(rng, dim, amp);
                terms.push((neg, x.adjoint()));
                terms.push((m, x));
            }
        }
    }
    FourierOperator::from_terms(basis, dim, terms).expect("consistent random series")
}
