//! Closed-form high-frequency expansion of the effective Hamiltonian.
//!
//! Both orders depend only on the Fourier content of `H`, never on the
//! flow generator. Every denominator is checked against a resonance guard
//! (`1e-12 * w1` by default); commensurate frequency combinations produce
//! [`Error::Resonance`] naming the offending mode rather than large values.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg;
use crate::modes::{FourierOperator, FrequencyBasis, ModeIndex};
use crate::scalar::{lit, re, to_f64, CMatrix, Real};

#[derive(Clone, Copy, Debug)]
pub struct HfeOptions<T> {
    /// Denominators smaller than `resonance_tol * w1` are rejected.
    pub resonance_tol: T,
    /// Upper bound on the truncation discard of the result, if any.
    pub max_discarded: Option<T>,
}

impl<T: Real> Default for HfeOptions<T> {
    fn default() -> Self {
        HfeOptions {
            resonance_tol: lit(1e-12),
            max_discarded: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Zero,
    One,
}

/// `order0 + order1_over_omega1` is the effective Hamiltonian to first
/// order in `1/w1`.
#[derive(Clone, Debug)]
pub struct EffectiveExpansion<T: Real> {
    pub order0: FourierOperator<T>,
    pub order1_over_omega1: FourierOperator<T>,
    pub basis: FrequencyBasis<T>,
}

impl<T: Real> EffectiveExpansion<T> {
    pub fn total(&self) -> Result<FourierOperator<T>> {
        self.order0.plus(&self.order1_over_omega1)
    }
}

struct Guard<T> {
    floor: T,
}

impl<T: Real> Guard<T> {
    fn new(basis: &FrequencyBasis<T>, opts: &HfeOptions<T>) -> Self {
        Guard {
            floor: opts.resonance_tol * basis.driving(),
        }
    }

    fn check(&self, value: T, context: &'static str, mode: &ModeIndex) -> Result<T> {
        if value.abs() < self.floor {
            Err(Error::Resonance {
                context,
                mode: mode.components().to_vec(),
                value: to_f64(value),
            })
        } else {
            Ok(value)
        }
    }
}

fn finish<T: Real>(
    h: &FourierOperator<T>,
    acc: BTreeMap<ModeIndex, CMatrix<T>>,
    opts: &HfeOptions<T>,
) -> Result<FourierOperator<T>> {
    let mut out = FourierOperator::zero(h.basis().clone(), h.dim(), h.caps().to_vec())?
        .with_prune_tol(h.prune_tol());
    out.charge_discarded(h.discarded_norm());
    for (mode, x) in acc {
        out.add_term(mode, x)?;
    }
    out.compact();
    if let Some(limit) = opts.max_discarded {
        if out.discarded_norm() > limit {
            return Err(Error::TruncationDiscard {
                discarded: to_f64(out.discarded_norm()),
                limit: to_f64(limit),
            });
        }
    }
    Ok(out)
}

fn push<T: Real>(acc: &mut BTreeMap<ModeIndex, CMatrix<T>>, mode: ModeIndex, x: CMatrix<T>) {
    match acc.get_mut(&mode) {
        Some(a) => *a += x,
        None => {
            acc.insert(mode, x);
        }
    }
}

/// Lowest order: `h_e0^{m0} = h^{m0} + (m0.w0) sum_{m1 != 0} h^(m1,m0) / (m.w)`.
pub fn effective_order0<T: Real>(h: &FourierOperator<T>) -> Result<FourierOperator<T>> {
    effective_order0_with(h, &HfeOptions::default())
}

pub fn effective_order0_with<T: Real>(
    h: &FourierOperator<T>,
    opts: &HfeOptions<T>,
) -> Result<FourierOperator<T>> {
    let basis = h.basis();
    let guard = Guard::new(basis, opts);
    let mut acc = BTreeMap::new();
    for (mode, x) in h.terms() {
        if mode.is_slow() {
            push(&mut acc, mode.clone(), x.clone());
        } else {
            let w = guard.check(mode.dot(basis), "order 0: m.w", mode)?;
            let c = mode.slow_dot(basis) / w;
            if c != T::zero() {
                push(&mut acc, mode.slow_part(), x * re(c));
            }
        }
    }
    finish(h, acc, opts)
}

/// First-order correction, already divided by `w1`.
///
/// Iterates over stored pairs `(n, b)` with `n1 != 0`; each pair contributes
/// `coef * [h^n, h^b]` to the slow mode `m0 = n0 + b0`. The coefficient
/// collects the four sum groups of the expansion: `b1 = 0`; `b1 = m1 != 0`;
/// `b1 = -n1`; and `b1 = m1 - n1` with `m1 != n1`, `m1 != 0`.
pub fn effective_order1<T: Real>(h: &FourierOperator<T>) -> Result<FourierOperator<T>> {
    effective_order1_with(h, &HfeOptions::default())
}

pub fn effective_order1_with<T: Real>(
    h: &FourierOperator<T>,
    opts: &HfeOptions<T>,
) -> Result<FourierOperator<T>> {
    let basis = h.basis();
    let guard = Guard::new(basis, opts);
    let w1 = basis.driving();
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let fl = |k: i32| lit::<T>(k as f64);

    let mut acc = BTreeMap::new();
    for (n, hn) in h.terms().filter(|(n, _)| !n.is_slow()) {
        let n1 = n.driving();
        let nw = guard.check(n.dot(basis), "order 1: n.w", n)?;
        let n0w = n.slow_dot(basis);
        for (b, hb) in h.terms() {
            let b1 = b.driving();
            let target = (n + b).slow_part();
            let m0w = target.slow_dot(basis);
            let b0w = b.slow_dot(basis);
            let mut coef = T::zero();

            if b1 == 0 {
                let d = guard.check(m0w + fl(n1) * w1, "order 1: m0.w0 + n1 w1", &target)?;
                coef -= fl(n1) * w1 / (nw * d);
            } else {
                let bw = guard.check(b.dot(basis), "order 1: (m - n).w", b)?;
                // Partner b = (m1, m0 - n0).
                let m = target.with_driving(b1);
                let mw = guard.check(m.dot(basis), "order 1: m.w", &m)?;
                coef -= (fl(b1) * w1 * b0w + m0w * m0w) / (bw * nw * mw);

                if b1 == -n1 {
                    let dm = guard.check(m0w - fl(n1) * w1, "order 1: m0.w0 - n1 w1", &target)?;
                    let dp = guard.check(m0w + fl(n1) * w1, "order 1: m0.w0 + n1 w1", &target)?;
                    let num = fl(n1 * n1) * w1 * w1 * ((m0w - two * n0w) - fl(n1) * w1);
                    coef -= half * num / (nw * dm * dp * bw);
                } else {
                    // Partner b = m - n with m1 = n1 + b1.
                    let m1 = n1 + b1;
                    let m = target.with_driving(m1);
                    let mw = guard.check(m.dot(basis), "order 1: m.w", &m)?;
                    let dn = guard.check(m0w + fl(n1) * w1, "order 1: m0.w0 + n1 w1", &target)?;
                    let db = guard.check(m0w + fl(b1) * w1, "order 1: m0.w0 + (m1 - n1) w1", &target)?;
                    let num = fl(b1) * fl(n1) * w1 * w1 * (m0w * ((two * n0w - m0w) - fl(b1) * w1) + fl(m1) * w1 * n0w);
                    coef -= half * num / (mw * nw * bw * dn * db);
                }
            }
            if coef != T::zero() {
                push(&mut acc, target, linalg::commutator(hn, hb) * re(coef));
            }
        }
    }
    finish(h, acc, opts)
}

/// First-order correction with `|w0|/w1` counted as one order higher:
/// `-(1/w1) sum (1/n1) [h^n, h^(0, m0-n0)] + (1/2w1) sum (1/n1) [h^n, h^(-n1, m0-n0)]`.
pub fn effective_order1_simplified<T: Real>(h: &FourierOperator<T>) -> Result<FourierOperator<T>> {
    effective_order1_simplified_with(h, &HfeOptions::default())
}

pub fn effective_order1_simplified_with<T: Real>(
    h: &FourierOperator<T>,
    opts: &HfeOptions<T>,
) -> Result<FourierOperator<T>> {
    let w1 = h.basis().driving();
    let mut acc = BTreeMap::new();
    for (n, hn) in h.terms().filter(|(n, _)| !n.is_slow()) {
        let n1 = lit::<T>(n.driving() as f64);
        for (b, hb) in h.terms() {
            let coef = if b.is_slow() {
                -T::one() / (n1 * w1)
            } else if b.driving() == -n.driving() {
                T::one() / (lit::<T>(2.0) * n1 * w1)
            } else {
                continue;
            };
            push(&mut acc, (n + b).slow_part(), linalg::commutator(hn, hb) * re(coef));
        }
    }
    finish(h, acc, opts)
}

pub fn expand<T: Real>(h: &FourierOperator<T>) -> Result<EffectiveExpansion<T>> {
    Ok(EffectiveExpansion {
        order0: effective_order0(h)?,
        order1_over_omega1: effective_order1(h)?,
        basis: h.basis().clone(),
    })
}

/// Effective Hamiltonian truncated at the given order.
pub fn effective_hamiltonian<T: Real>(h: &FourierOperator<T>, order: Order) -> Result<FourierOperator<T>> {
    match order {
        Order::Zero => effective_order0(h),
        Order::One => expand(h)?.total(),
    }
}
