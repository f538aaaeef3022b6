//! Flow equations in the auxiliary parameter `s`.
//!
//! The flow `dH/ds = i[eta, H] - d eta/dt` with the generator
//!
//! ```text
//! eta = -(i/w1) sum_m f_m h^m exp(i m0.w0 t) (exp(i m1 w1 t) - 1)
//! ```
//!
//! drives every mode with `m1 != 0` to zero while keeping the frame
//! transformation trivial at stroboscopic times. What survives as
//! `s -> inf` is the effective Hamiltonian.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg;
use crate::modes::{FourierOperator, FrequencyBasis, ModeIndex};
use crate::scalar::{lit, re, to_f64, CMatrix, Real};

/// Choice of the real scalars `f_m` in the generator.
///
/// Valid choices satisfy `f(-m) = -f(m)`, `f(m) = 0` when `m1 = 0`, and
/// `(m.w) f(m) > 0` when `m1 != 0`.
pub trait FlowGenerator<T: Real>: Sync {
    fn coefficient(&self, mode: &ModeIndex, basis: &FrequencyBasis<T>) -> T;
}

impl<T: Real, F> FlowGenerator<T> for F
where
    F: Fn(&ModeIndex, &FrequencyBasis<T>) -> T + Sync,
{
    fn coefficient(&self, mode: &ModeIndex, basis: &FrequencyBasis<T>) -> T {
        self(mode, basis)
    }
}

/// `f(m) = sign(m.w)` for `m1 != 0`, else 0. All off-modes then decay at
/// comparable rates.
#[derive(Clone, Copy, Debug, Default)]
pub struct SignGenerator;

impl<T: Real> FlowGenerator<T> for SignGenerator {
    fn coefficient(&self, mode: &ModeIndex, basis: &FrequencyBasis<T>) -> T {
        default_f(mode, basis)
    }
}

pub fn default_f<T: Real>(mode: &ModeIndex, basis: &FrequencyBasis<T>) -> T {
    if mode.is_slow() {
        return T::zero();
    }
    let w = mode.dot(basis);
    if w > T::zero() {
        T::one()
    } else if w < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Checks the three generator conditions on every mode of `h` and its
/// mirror image.
pub fn validate_generator<T: Real, G: FlowGenerator<T> + ?Sized>(
    h: &FourierOperator<T>,
    gen: &G,
) -> Result<()> {
    let basis = h.basis();
    for mode in h.modes() {
        for m in [mode.clone(), -mode] {
            let f = gen.coefficient(&m, basis);
            let f_neg = gen.coefficient(&-&m, basis);
            if !f.is_finite() {
                return Err(Error::InvalidGenerator(format!("f{m:?} is not finite")));
            }
            let scale = f.abs().max(T::one());
            if (f + f_neg).abs() > lit::<T>(1e-12) * scale {
                return Err(Error::InvalidGenerator(format!(
                    "f{m:?} = {} but f(-m) = {}",
                    to_f64(f),
                    to_f64(f_neg)
                )));
            }
            if m.is_slow() {
                if f != T::zero() {
                    return Err(Error::InvalidGenerator(format!(
                        "f{m:?} = {} must vanish for m1 = 0",
                        to_f64(f)
                    )));
                }
            } else if m.dot(basis) * f <= T::zero() {
                return Err(Error::InvalidGenerator(format!(
                    "(m.w) f(m) = {} is not positive at {m:?}",
                    to_f64(m.dot(basis) * f)
                )));
            }
        }
    }
    Ok(())
}

/// The generator `eta` as a Fourier series:
/// `eta^k = -(i/w1) f_k h^k` for `k1 != 0` and
/// `eta^{k0} = (i/w1) sum_{m1 != 0} f_(m1,k0) h^(m1,k0)`.
pub fn generator<T: Real, G: FlowGenerator<T> + ?Sized>(
    h: &FourierOperator<T>,
    gen: &G,
) -> Result<FourierOperator<T>> {
    validate_generator(h, gen)?;
    let basis = h.basis();
    let w1 = basis.driving();
    let mut eta = FourierOperator::zero(basis.clone(), h.dim(), h.caps().to_vec())?;
    for (mode, m) in h.terms() {
        if mode.is_slow() {
            continue;
        }
        let f = gen.coefficient(mode, basis);
        let c = Complex::new(T::zero(), f / w1);
        eta.add_term(mode.clone(), m * (-c))?;
        eta.add_term(mode.slow_part(), m * c)?;
    }
    eta.compact();
    Ok(eta)
}

/// Right-hand side `dH/ds` of the mode-resolved flow equations.
///
/// Slow modes receive the forcing term `(m0.w/w1) sum_{m1} f_m h^m` and
/// `(1/w1) sum_{n1 != 0} f_n [h^n, h^{m0-n} - h^{m0-n0}]`. Driving modes are
/// attenuated by `-(m.w/w1) f_m h^m` and couple through three commutator
/// sums. Output terms outside the caps of `h` are charged to the result's
/// discarded norm (the input's own discarded norm is not carried).
pub fn rhs_flow<T: Real, G: FlowGenerator<T> + ?Sized>(
    h: &FourierOperator<T>,
    gen: &G,
) -> Result<FourierOperator<T>> {
    validate_generator(h, gen)?;
    rhs_unchecked(h, gen)
}

fn rhs_unchecked<T: Real, G: FlowGenerator<T> + ?Sized>(
    h: &FourierOperator<T>,
    gen: &G,
) -> Result<FourierOperator<T>> {
    let basis = h.basis();
    let w1 = basis.driving();
    let inv = T::one() / w1;

    let fast: Vec<(&ModeIndex, &CMatrix<T>, T)> = h
        .terms()
        .filter(|(m, _)| !m.is_slow())
        .map(|(m, x)| (m, x, gen.coefficient(m, basis)))
        .collect();
    let slow: Vec<(&ModeIndex, &CMatrix<T>)> = h.terms().filter(|(m, _)| m.is_slow()).collect();

    let mut acc: BTreeMap<ModeIndex, CMatrix<T>> = BTreeMap::new();
    let mut push = |mode: ModeIndex, x: CMatrix<T>| match acc.get_mut(&mode) {
        Some(a) => *a += x,
        None => {
            acc.insert(mode, x);
        }
    };

    for &(m, x, f) in &fast {
        // Attenuation of the driving mode itself.
        push(m.clone(), x * re(-(m.dot(basis) * inv * f)));
        // Forcing of the slow mode m0.
        push(m.slow_part(), x * re(m.slow_dot(basis) * inv * f));
    }

    for &(n, hn, fn_) in &fast {
        let n0 = n.slow_part();
        // Slow outputs: [h^n, h^b] with b1 = -n1 lands on n + b;
        // [h^n, h^b] with b slow lands on n0 + b with the opposite sign.
        for &(b, hb, _) in &fast {
            if b.driving() == -n.driving() {
                push(n + b, linalg::commutator(hn, hb) * re(fn_ * inv));
            }
        }
        for &(b, hb) in &slow {
            push(&n0 + b, linalg::commutator(hn, hb) * re(-(fn_ * inv)));
        }
    }

    for &(a, ha, fa) in &fast {
        for &(n, hn, fn_) in &fast {
            // f_{m-n} [h^{m-n}, h^n] over n1 not in {0, m1}.
            if a.driving() + n.driving() != 0 {
                push(a + n, linalg::commutator(ha, hn) * re(fa * inv));
            }
            // f_n [h^{m-n0}, h^n] with m - n0 = a.
            push(a + &n.slow_part(), linalg::commutator(ha, hn) * re(fn_ * inv));
        }
        // f_{m-n0} [h^{m-n0}, h^{n0}] with m - n0 = a.
        for &(d, hd) in &slow {
            push(a + d, linalg::commutator(ha, hd) * re(fa * inv));
        }
    }

    let mut out = FourierOperator::zero(basis.clone(), h.dim(), h.caps().to_vec())?;
    for (mode, x) in acc {
        out.add_term(mode, x)?;
    }
    out.compact();
    Ok(out)
}

/// Integration controls. `stop_tol` defaults to `1e-10` times the initial
/// total norm.
#[derive(Clone, Debug)]
pub struct FlowOptions<T> {
    pub rtol: T,
    pub stop_tol: Option<T>,
    pub s_max: T,
    pub initial_step: T,
    pub max_steps: usize,
    /// Records `(s, off-mode norm)` after every accepted step.
    pub record_trace: bool,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        FlowOptions {
            rtol: lit(1e-9),
            stop_tol: None,
            s_max: lit(50.0),
            initial_step: lit(0.05),
            max_steps: 1_000_000,
            record_trace: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowResult<T: Real> {
    /// `m1 = 0` projection of the flowed Hamiltonian.
    pub effective: FourierOperator<T>,
    pub residual_offmode_norm: T,
    pub s_final: T,
    pub step_count: usize,
    /// Norm dropped by truncation, integrated along the flow, plus the
    /// input's own discarded norm.
    pub discarded_norm: T,
    pub trace: Vec<(T, T)>,
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Root-mean-square over modes of `|e_m| / (atol + rtol max(|y_m|, |y'_m|))`
/// for the embedded error estimate `e = h sum_j E_j k_j`. Computed without
/// pruning so that tiny decaying modes keep controlling the step.
fn error_ratio<T: Real>(
    ks: &[FourierOperator<T>],
    h: T,
    y: &FourierOperator<T>,
    y_new: &FourierOperator<T>,
    rtol: T,
    atol: T,
) -> T {
    let mut e: BTreeMap<&ModeIndex, CMatrix<T>> = BTreeMap::new();
    for (k, &w) in ks.iter().zip(E.iter()) {
        if w == 0.0 {
            continue;
        }
        let c = re(h * lit::<T>(w));
        for (m, x) in k.terms() {
            match e.get_mut(m) {
                Some(acc) => *acc += x * c,
                None => {
                    e.insert(m, x * c);
                }
            }
        }
    }
    let norm_at = |op: &FourierOperator<T>, m: &ModeIndex| op.term(m).map(linalg::frobenius).unwrap_or_else(T::zero);
    let mut sum = T::zero();
    for (m, x) in &e {
        let sc = atol + rtol * norm_at(y, m).max(norm_at(y_new, m));
        let r = linalg::frobenius(x) / sc;
        sum += r * r;
    }
    if e.is_empty() {
        return T::zero();
    }
    (sum / lit::<T>(e.len() as f64)).sqrt()
}

/// Integrates the flow from `h0` until the off-mode norm drops below the
/// stop tolerance.
pub fn integrate_flow<T: Real, G: FlowGenerator<T> + ?Sized>(
    h0: &FourierOperator<T>,
    gen: &G,
    opts: &FlowOptions<T>,
) -> Result<FlowResult<T>> {
    validate_generator(h0, gen)?;
    if !(opts.rtol > T::zero()) || !(opts.s_max > T::zero()) {
        return Err(Error::InvalidArgument("rtol and s_max must be positive".into()));
    }
    let stop_tol = opts.stop_tol.unwrap_or_else(|| lit::<T>(1e-10) * h0.norm());
    if !(stop_tol > T::zero()) {
        return Err(Error::InvalidArgument("stop tolerance must be positive".into()));
    }

    // Absolute floor of the modewise error control; decaying off-modes
    // must stay resolved down to the stop tolerance.
    let atol = lit::<T>(1e-3) * stop_tol;
    let mut y = h0.clone();
    let mut discarded = y.take_discarded();
    let mut s = T::zero();
    let mut step = opts.initial_step.min(opts.s_max);
    let mut steps = 0usize;
    let mut trace = Vec::new();
    let mut off = y.offmode_norm();
    if opts.record_trace {
        trace.push((s, off));
    }

    let mut k1 = rhs_unchecked(&y, gen)?;
    let mut rate = k1.take_discarded();

    while off >= stop_tol {
        if s >= opts.s_max || steps >= opts.max_steps {
            return Err(Error::FlowNotConverged {
                residual: to_f64(off),
                s: to_f64(s),
                steps,
            });
        }
        if step < lit::<T>(1e-14) * (T::one() + s) {
            return Err(Error::StepUnderflow { s: to_f64(s) });
        }
        let h = step.min(opts.s_max - s);

        let mut ks: Vec<FourierOperator<T>> = vec![k1.clone()];
        let mut stage_rates = vec![rate];
        for i in 1..7 {
            let mut coeffs = vec![re(T::one())];
            let mut ops = vec![&y];
            for (j, k) in ks.iter().enumerate().take(i) {
                if A[i][j] != 0.0 {
                    coeffs.push(re(h * lit::<T>(A[i][j])));
                    ops.push(k);
                }
            }
            let yi = FourierOperator::linear_combine(&coeffs, &ops)?;
            let mut ki = rhs_unchecked(&yi, gen)?;
            stage_rates.push(ki.take_discarded());
            ks.push(ki);
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        let mut coeffs = vec![re(T::one())];
        let mut ops = vec![&y];
        for (j, k) in ks.iter().enumerate().take(6) {
            if A[6][j] != 0.0 {
                coeffs.push(re(h * lit::<T>(A[6][j])));
                ops.push(k);
            }
        }
        let y_new = FourierOperator::linear_combine(&coeffs, &ops)?;

        let err = error_ratio(&ks, h, &y, &y_new, opts.rtol, atol);

        if err <= T::one() {
            s += h;
            steps += 1;
            let mean_rate = stage_rates
                .iter()
                .zip(A[6].iter().chain(std::iter::once(&0.0)))
                .fold(T::zero(), |a, (r, w)| a + *r * lit::<T>(*w));
            discarded += h * mean_rate;
            y = y_new;
            k1 = ks.pop().expect("seven stages");
            rate = *stage_rates.last().expect("seven stages");
            off = y.offmode_norm();
            if opts.record_trace {
                trace.push((s, off));
            }
            debug_assert!(
                y.hermitian_defect() <= lit::<T>(1e-8) * (T::one() + y.norm()),
                "flow lost hermiticity at s = {}",
                to_f64(s)
            );
        }
        let factor = if err > T::zero() {
            (lit::<T>(0.9) * err.powf(lit(-0.2))).clamp(lit(0.2), lit(5.0))
        } else {
            lit(5.0)
        };
        step = h * factor;
    }

    let mut effective = y.slow_sector();
    effective.take_discarded();
    effective.charge_discarded(discarded);
    Ok(FlowResult {
        effective,
        residual_offmode_norm: off,
        s_final: s,
        step_count: steps,
        discarded_norm: discarded,
        trace,
    })
}
