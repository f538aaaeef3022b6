//! Time-ordered propagation and gate fidelity.
//!
//! `i dU/dt = H(t) U` is integrated with the fourth-order commutator-free
//! exponential scheme
//!
//! ```text
//! U(t+h) = exp(-i h (a1 H1 + a2 H2)) exp(-i h (a2 H1 + a1 H2)) U(t)
//! ```
//!
//! with `H1, H2` sampled at the Gauss-Legendre nodes `t + (1/2 -+ sqrt(3)/6) h`
//! and `a1 = 1/4 - sqrt(3)/6`, `a2 = 1/4 + sqrt(3)/6`. The step count is
//! doubled until two successive results agree to the requested tolerance.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{self, exp_minus_i, frobenius, identity};
use crate::scalar::{lit, re, to_f64, CMatrix, Real};

#[derive(Clone, Debug)]
pub struct PropagationReport<T: Real> {
    pub u: CMatrix<T>,
    pub t0: T,
    pub t1: T,
    /// `|U^dag U - 1|` (Frobenius).
    pub unitarity_defect: T,
    pub steps: usize,
    pub tolerance: T,
    /// Frobenius distance between the returned propagator and the one with
    /// half as many steps.
    pub halving_difference: T,
}

#[derive(Clone, Copy, Debug)]
pub struct PropagationOptions<T> {
    pub tol: T,
    pub initial_steps: usize,
    pub max_steps: usize,
}

impl<T: Real> PropagationOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        PropagationOptions {
            tol,
            initial_steps: 4,
            max_steps: 1 << 18,
        }
    }
}

/// Applies `steps` uniform CF4 steps over `[t0, t1]` to `u`.
pub fn cf4_steps<T, F>(h: &F, t0: T, t1: T, steps: usize, mut u: CMatrix<T>) -> CMatrix<T>
where
    T: Real,
    F: Fn(T) -> CMatrix<T> + ?Sized,
{
    let s3 = lit::<T>(3.0).sqrt();
    let half = lit::<T>(0.5);
    let c1 = half - s3 / lit(6.0);
    let c2 = half + s3 / lit(6.0);
    let a1 = lit::<T>(0.25) - s3 / lit(6.0);
    let a2 = lit::<T>(0.25) + s3 / lit(6.0);
    let dt = (t1 - t0) / lit::<T>(steps as f64);
    for k in 0..steps {
        let t = t0 + dt * lit::<T>(k as f64);
        let h1 = h(t + c1 * dt);
        let h2 = h(t + c2 * dt);
        let first = &h1 * re(a2) + &h2 * re(a1);
        let second = &h1 * re(a1) + &h2 * re(a2);
        u = exp_minus_i(&first, dt) * u;
        u = exp_minus_i(&second, dt) * u;
    }
    u
}

/// Propagator from `t0` to `t1`, refined by step doubling until successive
/// results differ by less than `tol` in Frobenius norm.
pub fn propagate<T, F>(h: &F, t0: T, t1: T, tol: T) -> Result<PropagationReport<T>>
where
    T: Real,
    F: Fn(T) -> CMatrix<T> + ?Sized,
{
    propagate_with(h, t0, t1, &PropagationOptions::with_tol(tol))
}

pub fn propagate_with<T, F>(h: &F, t0: T, t1: T, opts: &PropagationOptions<T>) -> Result<PropagationReport<T>>
where
    T: Real,
    F: Fn(T) -> CMatrix<T> + ?Sized,
{
    if !(t1 > t0) {
        return Err(Error::InvalidArgument("propagation needs t1 > t0".into()));
    }
    if !(opts.tol > T::zero()) {
        return Err(Error::InvalidArgument("propagation tolerance must be positive".into()));
    }
    let probe = h(t0 + (t1 - t0) * lit(0.5));
    let dim = probe.nrows();
    // Start near one unit of phase per step; coarser grids are never accurate.
    let phase = to_f64(linalg::one_norm(&probe) * (t1 - t0));
    let mut n = opts.initial_steps.max(1).max(phase.ceil() as usize);
    let mut coarse = cf4_steps(h, t0, t1, n, identity(dim));
    loop {
        let fine = cf4_steps(h, t0, t1, 2 * n, identity(dim));
        let diff = frobenius(&(&fine - &coarse));
        n *= 2;
        if diff < opts.tol {
            return Ok(PropagationReport {
                unitarity_defect: linalg::unitarity_defect(&fine),
                u: fine,
                t0,
                t1,
                steps: n,
                tolerance: opts.tol,
                halving_difference: diff,
            });
        }
        if 2 * n > opts.max_steps {
            return Err(Error::PropagationTolerance {
                tol: to_f64(opts.tol),
                achieved: to_f64(diff),
                steps: n,
            });
        }
        coarse = fine;
    }
}

/// `Re Tr(U0^dag Ue) / dim`. No absolute value is taken, so a global phase
/// of `-1` gives `-1`.
pub fn gate_fidelity<T: Real>(u0: &CMatrix<T>, ue: &CMatrix<T>) -> Result<T> {
    if u0.shape() != ue.shape() || u0.nrows() != u0.ncols() {
        return Err(Error::DimensionMismatch(u0.nrows(), ue.nrows()));
    }
    let dim = lit::<T>(u0.nrows() as f64);
    let tr: Complex<T> = (u0.adjoint() * ue).trace();
    Ok(tr.re / dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli;
    use std::f64::consts::PI;

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let h = |_t: f64| linalg::zeros::<f64>(3);
        let r = propagate(&h, 0.0, 2.0, 1e-12).unwrap();
        assert!(frobenius(&(r.u - identity::<f64>(3))) < 1e-15);
    }

    #[test]
    fn constant_sigma_z_over_pi_is_minus_one() {
        let h = |_t: f64| pauli::z::<f64>();
        let r = propagate(&h, 0.0, PI, 1e-12).unwrap();
        assert!(frobenius(&(r.u + identity::<f64>(2))) < 1e-12);
        assert!(r.unitarity_defect < 1e-11);
    }

    #[test]
    fn driven_qubit_converges_at_fourth_order() {
        let w = 3.0;
        let h = |t: f64| pauli::x::<f64>() * Complex::new((w * t).cos(), 0.0) + pauli::z::<f64>() * Complex::new(0.4, 0.0);
        let t1 = 2.0 * PI / w;
        let reference = cf4_steps(&h, 0.0, t1, 4096, identity(2));
        let errs: Vec<f64> = [8usize, 16, 32]
            .iter()
            .map(|&n| frobenius(&(cf4_steps(&h, 0.0, t1, n, identity(2)) - &reference)))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 16.0 - 2.0, "ratio {ratio} errs {errs:?}");
        }
    }

    #[test]
    fn composition_matches_direct_propagation() {
        let h = |t: f64| pauli::x::<f64>() * Complex::new((2.0 * t).sin(), 0.0) + pauli::y::<f64>() * Complex::new(0.3, 0.0);
        let tol = 1e-10;
        let a = propagate(&h, 0.0, 0.7, tol).unwrap();
        let b = propagate(&h, 0.7, 1.9, tol).unwrap();
        let c = propagate(&h, 0.0, 1.9, tol).unwrap();
        assert!(frobenius(&(&b.u * &a.u - &c.u)) < 3.0 * tol);
    }

    #[test]
    fn fidelity_values() {
        let u = exp_minus_i(&pauli::x::<f64>(), 0.3);
        assert!((gate_fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        let flipped = &u * Complex::new(-1.0, 0.0);
        assert!((gate_fidelity(&u, &flipped).unwrap() + 1.0).abs() < 1e-15);
        assert!(gate_fidelity(&u, &identity::<f64>(3)).is_err());
    }

    #[test]
    fn unreachable_tolerance_is_reported() {
        let h = |t: f64| pauli::x::<f64>() * Complex::new((50.0 * t).cos() * 40.0, 0.0);
        let opts = PropagationOptions { tol: 1e-14, initial_steps: 1, max_steps: 16 };
        assert!(matches!(propagate_with(&h, 0.0, 1.0, &opts), Err(Error::PropagationTolerance { .. })));
    }
}
