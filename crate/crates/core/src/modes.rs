//! Multi-mode Fourier series of operators.
//!
//! A [`FourierOperator`] stores `H(t) = sum_m h^m exp(i m.omega t)` as a sparse
//! map from integer mode vectors to dense complex matrices. Component 0 of
//! every mode vector is the driving-frequency index; the remaining
//! components index the slow frequencies that survive in effective
//! Hamiltonians.
//!
//! Products of series (commutators) widen the mode content. Every operator
//! carries per-component caps on `|m_j|`; terms generated outside the caps
//! are dropped and their Frobenius norm is added to `discarded_norm`, which
//! only ever grows along a chain of operations.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, frobenius, frobenius_sq};
use crate::scalar::{cis, lit, re, to_f64, CMatrix, Real};

/// Frobenius norm below which a term is removed from the map.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-14;

/// Integer mode vector `m`; `m[0]` is the driving-mode index `m_1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex(Vec<i32>);

impl ModeIndex {
    pub fn new(components: Vec<i32>) -> Self {
        ModeIndex(components)
    }

    pub fn zero(len: usize) -> Self {
        ModeIndex(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self) -> &[i32] {
        &self.0
    }

    /// The driving-mode index `m_1`.
    pub fn driving(&self) -> i32 {
        self.0[0]
    }

    /// True when `m_1 = 0`, i.e. the mode carries no driving-frequency
    /// dependence.
    pub fn is_slow(&self) -> bool {
        self.0[0] == 0
    }

    /// `m_0 = [0, m_2, m_3, ...]`.
    pub fn slow_part(&self) -> ModeIndex {
        self.with_driving(0)
    }

    /// Copy of `self` with the driving component replaced.
    pub fn with_driving(&self, m1: i32) -> ModeIndex {
        let mut v = self.0.clone();
        v[0] = m1;
        ModeIndex(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// `m . omega`.
    pub fn dot<T: Real>(&self, basis: &FrequencyBasis<T>) -> T {
        self.0
            .iter()
            .zip(basis.omegas())
            .fold(T::zero(), |acc, (&m, &w)| acc + w * lit::<T>(m as f64))
    }

    /// `m_0 . omega_0`, the slow part of the frequency.
    pub fn slow_dot<T: Real>(&self, basis: &FrequencyBasis<T>) -> T {
        self.0
            .iter()
            .zip(basis.omegas())
            .skip(1)
            .fold(T::zero(), |acc, (&m, &w)| acc + w * lit::<T>(m as f64))
    }

    fn within(&self, caps: &[i32]) -> bool {
        self.0.iter().zip(caps).all(|(&m, &c)| m.abs() <= c)
    }
}

impl fmt::Debug for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i32>> for ModeIndex {
    fn from(v: Vec<i32>) -> Self {
        ModeIndex(v)
    }
}

impl<const N: usize> From<[i32; N]> for ModeIndex {
    fn from(v: [i32; N]) -> Self {
        ModeIndex(v.to_vec())
    }
}

impl Neg for &ModeIndex {
    type Output = ModeIndex;
    fn neg(self) -> ModeIndex {
        ModeIndex(self.0.iter().map(|m| -m).collect())
    }
}

impl Add for &ModeIndex {
    type Output = ModeIndex;
    fn add(self, rhs: &ModeIndex) -> ModeIndex {
        ModeIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &ModeIndex {
    type Output = ModeIndex;
    fn sub(self, rhs: &ModeIndex) -> ModeIndex {
        ModeIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// Fundamental angular frequencies; `omega[0]` is the driving frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyBasis<T> {
    omegas: Vec<T>,
}

impl<T: Real> FrequencyBasis<T> {
    pub fn new(omegas: Vec<T>) -> Result<Self> {
        if omegas.len() < 2 {
            return Err(Error::InvalidBasis(format!(
                "need at least two frequencies, got {}",
                omegas.len()
            )));
        }
        if let Some(w) = omegas.iter().find(|w| !(**w > T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidBasis(format!(
                "frequencies must be positive and finite, got {}",
                to_f64(*w)
            )));
        }
        Ok(FrequencyBasis { omegas })
    }

    /// Two-frequency basis `(omega_1, omega_2)`.
    pub fn two(omega1: T, omega2: T) -> Result<Self> {
        Self::new(vec![omega1, omega2])
    }

    pub fn omegas(&self) -> &[T] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn driving(&self) -> T {
        self.omegas[0]
    }

    /// `eta_j = omega_j / omega_1` for `j >= 1` (0-based).
    pub fn eta(&self, j: usize) -> T {
        self.omegas[j] / self.omegas[0]
    }

    /// Driving period `2 pi / omega_1`.
    pub fn period(&self) -> T {
        T::two_pi() / self.omegas[0]
    }

    /// Same ratios with every frequency multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        FrequencyBasis {
            omegas: self.omegas.iter().map(|&w| w * factor).collect(),
        }
    }
}

/// Multi-mode Fourier series of `dim x dim` complex matrices.
#[derive(Clone, Debug)]
pub struct FourierOperator<T: Real> {
    dim: usize,
    basis: FrequencyBasis<T>,
    terms: BTreeMap<ModeIndex, CMatrix<T>>,
    caps: Vec<i32>,
    discarded_norm: T,
    prune_tol: T,
}

impl<T: Real> FourierOperator<T> {
    /// Empty (zero) series with explicit mode caps.
    pub fn zero(basis: FrequencyBasis<T>, dim: usize, caps: Vec<i32>) -> Result<Self> {
        if caps.len() != basis.len() {
            return Err(Error::ModeLength {
                expected: basis.len(),
                found: caps.len(),
            });
        }
        Ok(FourierOperator {
            dim,
            basis,
            terms: BTreeMap::new(),
            caps,
            discarded_norm: T::zero(),
            prune_tol: lit(DEFAULT_PRUNE_TOL),
        })
    }

    /// Builds a series from explicit terms. Repeated modes are summed. Caps
    /// default to twice the per-component width of the input.
    pub fn from_terms<I>(basis: FrequencyBasis<T>, dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ModeIndex, CMatrix<T>)>,
    {
        let mut map: BTreeMap<ModeIndex, CMatrix<T>> = BTreeMap::new();
        for (mode, m) in terms {
            if mode.len() != basis.len() {
                return Err(Error::ModeLength {
                    expected: basis.len(),
                    found: mode.len(),
                });
            }
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(dim, m.nrows()));
            }
            match map.get_mut(&mode) {
                Some(acc) => *acc += m,
                None => {
                    map.insert(mode, m);
                }
            }
        }
        let mut width = vec![0; basis.len()];
        for mode in map.keys() {
            for (w, c) in width.iter_mut().zip(mode.components()) {
                *w = (*w).max(c.abs());
            }
        }
        let caps = width.iter().map(|w| 2 * w).collect();
        let mut op = FourierOperator {
            dim,
            basis,
            terms: map,
            caps,
            discarded_norm: T::zero(),
            prune_tol: lit(DEFAULT_PRUNE_TOL),
        };
        op.prune();
        Ok(op)
    }

    /// Time-independent series `{0: m}`.
    pub fn constant(basis: FrequencyBasis<T>, m: CMatrix<T>) -> Result<Self> {
        let zero = ModeIndex::zero(basis.len());
        let dim = m.nrows();
        Self::from_terms(basis, dim, [(zero, m)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &FrequencyBasis<T> {
        &self.basis
    }

    pub fn caps(&self) -> &[i32] {
        &self.caps
    }

    pub fn discarded_norm(&self) -> T {
        self.discarded_norm
    }

    /// Returns the accumulated discarded norm and resets it.
    pub(crate) fn take_discarded(&mut self) -> T {
        std::mem::replace(&mut self.discarded_norm, T::zero())
    }

    pub(crate) fn charge_discarded(&mut self, amount: T) {
        self.discarded_norm += amount;
    }

    pub fn prune_tol(&self) -> T {
        self.prune_tol
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ModeIndex, &CMatrix<T>)> {
        self.terms.iter()
    }

    pub fn modes(&self) -> impl Iterator<Item = &ModeIndex> {
        self.terms.keys()
    }

    pub fn term(&self, mode: &ModeIndex) -> Option<&CMatrix<T>> {
        self.terms.get(mode)
    }

    /// Term at `mode`, or the zero matrix.
    pub fn term_or_zero(&self, mode: &ModeIndex) -> CMatrix<T> {
        self.terms
            .get(mode)
            .cloned()
            .unwrap_or_else(|| linalg::zeros(self.dim))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Replaces the caps. Terms now outside are dropped and charged to the
    /// discarded norm.
    pub fn with_caps(mut self, caps: Vec<i32>) -> Result<Self> {
        if caps.len() != self.basis.len() {
            return Err(Error::ModeLength {
                expected: self.basis.len(),
                found: caps.len(),
            });
        }
        self.caps = caps;
        let caps = self.caps.clone();
        let mut dropped = T::zero();
        self.terms.retain(|mode, m| {
            let keep = mode.within(&caps);
            if !keep {
                dropped += frobenius(m);
            }
            keep
        });
        self.discarded_norm += dropped;
        Ok(self)
    }

    pub fn with_prune_tol(mut self, tol: T) -> Self {
        self.prune_tol = tol;
        self.prune();
        self
    }

    /// Same terms over a different basis of equal length.
    pub fn rebased(mut self, basis: FrequencyBasis<T>) -> Result<Self> {
        if basis.len() != self.basis.len() {
            return Err(Error::BasisMismatch);
        }
        self.basis = basis;
        Ok(self)
    }

    /// Per-component maximum `|m_j|` over stored terms.
    pub fn width(&self) -> Vec<i32> {
        let mut width = vec![0; self.basis.len()];
        for mode in self.terms.keys() {
            for (w, c) in width.iter_mut().zip(mode.components()) {
                *w = (*w).max(c.abs());
            }
        }
        width
    }

    /// `sum_m h^m exp(i m.omega t)`.
    pub fn evaluate_at(&self, t: T) -> CMatrix<T> {
        let mut out = linalg::zeros(self.dim);
        for (mode, m) in &self.terms {
            let phase = cis(mode.dot(&self.basis) * t);
            out += m * phase;
        }
        out
    }

    /// Modewise Frobenius norm `sqrt(sum_m ||h^m||^2)`.
    pub fn norm(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |acc, m| acc + frobenius_sq(m))
            .sqrt()
    }

    /// Norm of the terms with `m_1 != 0`.
    pub fn offmode_norm(&self) -> T {
        self.terms
            .iter()
            .filter(|(mode, _)| !mode.is_slow())
            .fold(T::zero(), |acc, (_, m)| acc + frobenius_sq(m))
            .sqrt()
    }

    /// `sqrt(sum_m ||h^{-m} - (h^m)^dagger||^2)`; zero for a hermitian series.
    pub fn hermitian_defect(&self) -> T {
        let mut acc = T::zero();
        for (mode, m) in &self.terms {
            let partner = self.term_or_zero(&-mode);
            acc += frobenius_sq(&(partner - m.adjoint()));
        }
        // Modes whose partner is stored but which are themselves absent were
        // already counted from the partner side.
        acc.sqrt()
    }

    pub fn is_hermitian_series(&self, tol: T) -> bool {
        self.hermitian_defect() <= tol
    }

    /// `H(t)^dagger` as a series: `term(m) <- term(-m)^dagger`.
    pub fn adjoint(&self) -> Self {
        let mut out = self.empty_like();
        for (mode, m) in &self.terms {
            out.terms.insert(-mode, m.adjoint());
        }
        out.discarded_norm = self.discarded_norm;
        out
    }

    /// Modewise distance `|| self - other ||`.
    pub fn distance(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for (mode, m) in &self.terms {
            match other.terms.get(mode) {
                Some(o) => acc += frobenius_sq(&(m - o)),
                None => acc += frobenius_sq(m),
            }
        }
        for (mode, o) in &other.terms {
            if !self.terms.contains_key(mode) {
                acc += frobenius_sq(o);
            }
        }
        acc.sqrt()
    }

    fn empty_like(&self) -> Self {
        FourierOperator {
            dim: self.dim,
            basis: self.basis.clone(),
            terms: BTreeMap::new(),
            caps: self.caps.clone(),
            discarded_norm: T::zero(),
            prune_tol: self.prune_tol,
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    fn merged_caps(&self, other: &Self) -> Vec<i32> {
        self.caps
            .iter()
            .zip(&other.caps)
            .map(|(a, b)| *a.max(b))
            .collect()
    }

    fn prune(&mut self) {
        let tol = self.prune_tol;
        self.terms.retain(|_, m| frobenius(m) >= tol);
    }

    /// Adds `m` to the term at `mode`, respecting caps.
    pub fn add_term(&mut self, mode: ModeIndex, m: CMatrix<T>) -> Result<()> {
        if mode.len() != self.basis.len() {
            return Err(Error::ModeLength {
                expected: self.basis.len(),
                found: mode.len(),
            });
        }
        if m.nrows() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, m.nrows()));
        }
        if !mode.within(&self.caps) {
            self.discarded_norm += frobenius(&m);
            return Ok(());
        }
        match self.terms.get_mut(&mode) {
            Some(acc) => *acc += m,
            None => {
                self.terms.insert(mode, m);
            }
        }
        Ok(())
    }

    /// Removes negligible terms; call after a sequence of [`add_term`](Self::add_term).
    pub fn compact(&mut self) {
        self.prune();
    }

    /// `term(m) = sum_n [A^n, B^{m-n}]`. Modes beyond the caps are dropped and
    /// charged to the discarded norm.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.empty_like();
        out.caps = self.merged_caps(other);
        let mut acc: BTreeMap<ModeIndex, CMatrix<T>> = BTreeMap::new();
        for (na, a) in &self.terms {
            for (nb, b) in &other.terms {
                let mode = na + nb;
                let c = linalg::commutator(a, b);
                match acc.get_mut(&mode) {
                    Some(x) => *x += c,
                    None => {
                        acc.insert(mode, c);
                    }
                }
            }
        }
        let mut dropped = T::zero();
        for (mode, m) in acc {
            if mode.within(&out.caps) {
                out.terms.insert(mode, m);
            } else {
                dropped += frobenius(&m);
            }
        }
        out.discarded_norm = self.discarded_norm + other.discarded_norm + dropped;
        out.prune();
        Ok(out)
    }

    /// Modewise `sum_k coeffs[k] * ops[k]`.
    pub fn linear_combine(coeffs: &[Complex<T>], ops: &[&Self]) -> Result<Self> {
        if coeffs.len() != ops.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} operators",
                coeffs.len(),
                ops.len()
            )));
        }
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("no operators to combine".into()))?;
        let mut out = first.empty_like();
        for op in ops {
            first.check_compatible(op)?;
            out.caps = out.merged_caps(op);
            out.discarded_norm += op.discarded_norm;
        }
        for (c, op) in coeffs.iter().zip(ops) {
            for (mode, m) in &op.terms {
                let scaled = m * *c;
                match out.terms.get_mut(mode) {
                    Some(x) => *x += scaled,
                    None => {
                        out.terms.insert(mode.clone(), scaled);
                    }
                }
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        let mut out = self.clone();
        for m in out.terms.values_mut() {
            *m *= c;
        }
        out.prune();
        out
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        let one = re(T::one());
        Self::linear_combine(&[one, one], &[self, other])
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        Self::linear_combine(&[re(T::one()), re(-T::one())], &[self, other])
    }

    /// Keeps only terms whose mode satisfies `keep`. Nothing is charged to
    /// the discarded norm.
    pub fn mode_projection<P>(&self, keep: P) -> Self
    where
        P: Fn(&ModeIndex) -> bool,
    {
        let mut out = self.empty_like();
        out.discarded_norm = self.discarded_norm;
        for (mode, m) in &self.terms {
            if keep(mode) {
                out.terms.insert(mode.clone(), m.clone());
            }
        }
        out
    }

    /// Projection onto the `m_1 = 0` sector.
    pub fn slow_sector(&self) -> Self {
        self.mode_projection(|m| m.is_slow())
    }

    /// `dH/dt` as a series: `term(m) <- i (m.omega) term(m)`.
    pub fn time_derivative(&self) -> Self {
        let mut out = self.clone();
        for (mode, m) in out.terms.iter_mut() {
            *m *= Complex::new(T::zero(), mode.dot(&self.basis));
        }
        out.prune();
        out
    }

    pub fn to_record(&self) -> FourierRecord {
        FourierRecord {
            dim: self.dim,
            basis: self.basis.omegas().iter().map(|&w| to_f64(w)).collect(),
            caps: self.caps.clone(),
            discarded_norm: to_f64(self.discarded_norm),
            terms: self
                .terms
                .iter()
                .map(|(mode, m)| {
                    let mut data = Vec::with_capacity(2 * self.dim * self.dim);
                    for i in 0..self.dim {
                        for j in 0..self.dim {
                            data.push(to_f64(m[(i, j)].re));
                            data.push(to_f64(m[(i, j)].im));
                        }
                    }
                    TermRecord {
                        mode: mode.components().to_vec(),
                        data,
                    }
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &FourierRecord) -> Result<Self> {
        let basis = FrequencyBasis::new(rec.basis.iter().map(|&w| lit::<T>(w)).collect())?;
        let mut op = Self::zero(basis, rec.dim, rec.caps.clone())?;
        for term in &rec.terms {
            if term.data.len() != 2 * rec.dim * rec.dim {
                return Err(Error::InvalidArgument(format!(
                    "term {:?} has {} values, expected {}",
                    term.mode,
                    term.data.len(),
                    2 * rec.dim * rec.dim
                )));
            }
            let m = CMatrix::<T>::from_fn(rec.dim, rec.dim, |i, j| {
                let k = 2 * (i * rec.dim + j);
                Complex::new(lit(term.data[k]), lit(term.data[k + 1]))
            });
            op.add_term(ModeIndex::new(term.mode.clone()), m)?;
        }
        op.discarded_norm = lit(rec.discarded_norm);
        Ok(op)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: FourierRecord = serde_json::from_str(s)?;
        Self::from_record(&rec)
    }
}

/// Text record of a [`FourierOperator`]: matrices are row-major with
/// interleaved real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierRecord {
    pub dim: usize,
    pub basis: Vec<f64>,
    pub caps: Vec<i32>,
    pub discarded_norm: f64,
    pub terms: Vec<TermRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub mode: Vec<i32>,
    pub data: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli;
    use std::f64::consts::PI;

    fn basis() -> FrequencyBasis<f64> {
        FrequencyBasis::two(1.3, 0.41).unwrap()
    }

    #[test]
    fn constant_term_evaluates_to_itself() {
        let a = FourierOperator::constant(basis(), pauli::z()).unwrap();
        for t in [0.0, 0.7, -12.0] {
            assert!(frobenius(&(a.evaluate_at(t) - pauli::z())) < 1e-15);
        }
    }

    #[test]
    fn phases_reduce_at_integer_periods() {
        let b = basis();
        let a = FourierOperator::from_terms(
            b.clone(),
            2,
            [
                (ModeIndex::from([1, 0]), pauli::plus()),
                (ModeIndex::from([-1, 0]), pauli::minus()),
            ],
        )
        .unwrap();
        let t = 2.0 * PI / b.driving();
        assert!(frobenius(&(a.evaluate_at(t) - pauli::x())) < 1e-14);
    }

    #[test]
    fn sigma_plus_minus_commutator_is_sigma_z() {
        let b = basis();
        let a = FourierOperator::from_terms(b.clone(), 2, [(ModeIndex::from([1, 0]), pauli::plus())]).unwrap();
        let bm = FourierOperator::from_terms(b, 2, [(ModeIndex::from([-1, 0]), pauli::minus())]).unwrap();
        let c = a.commutator(&bm).unwrap();
        assert_eq!(c.len(), 1);
        assert!(frobenius(&(c.term_or_zero(&ModeIndex::zero(2)) - pauli::z())) < 1e-15);
    }

    #[test]
    fn self_commutator_vanishes() {
        let b = basis();
        let a = FourierOperator::from_terms(
            b,
            2,
            [
                (ModeIndex::from([1, 2]), pauli::x()),
                (ModeIndex::from([0, -1]), pauli::y()),
            ],
        )
        .unwrap();
        assert!(a.commutator(&a).unwrap().is_empty());
    }

    #[test]
    fn linear_combination_cancels_and_scales() {
        let b = basis();
        let a = FourierOperator::from_terms(b.clone(), 2, [(ModeIndex::from([1, 0]), pauli::x())]).unwrap();
        let z = FourierOperator::linear_combine(&[Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)], &[&a, &a]).unwrap();
        assert!(z.is_empty());
        let id = FourierOperator::constant(b, linalg::identity::<f64>(2)).unwrap();
        let two = FourierOperator::linear_combine(&[Complex::new(2.0, 0.0)], &[&id]).unwrap();
        assert!(frobenius(&(two.term_or_zero(&ModeIndex::zero(2)) - linalg::identity::<f64>(2) * Complex::new(2.0, 0.0))) < 1e-15);
    }

    #[test]
    fn projection_keeps_slow_sector() {
        let b = basis();
        let a = FourierOperator::from_terms(
            b,
            2,
            [
                (ModeIndex::from([0, 0]), pauli::x()),
                (ModeIndex::from([1, 0]), pauli::y()),
            ],
        )
        .unwrap();
        let p = a.slow_sector();
        assert_eq!(p.len(), 1);
        assert!(p.term(&ModeIndex::from([0, 0])).is_some());
        let all = a.mode_projection(|_| true);
        assert_eq!(all.len(), 2);
        assert_eq!(p.discarded_norm(), 0.0);
    }

    #[test]
    fn commutator_outside_caps_is_charged() {
        let b = basis();
        let a = FourierOperator::from_terms(b.clone(), 2, [(ModeIndex::from([1, 0]), pauli::x())])
            .unwrap()
            .with_caps(vec![1, 0])
            .unwrap();
        let c = FourierOperator::from_terms(b, 2, [(ModeIndex::from([1, 0]), pauli::y())])
            .unwrap()
            .with_caps(vec![1, 0])
            .unwrap();
        // [x, y] lands on mode (2, 0), outside the caps.
        let out = a.commutator(&c).unwrap();
        assert!(out.is_empty());
        let expected = frobenius(&linalg::commutator(&pauli::x::<f64>(), &pauli::y()));
        assert!((out.discarded_norm() - expected).abs() < 1e-14);
        let sum = out.plus(&a).unwrap();
        assert!(sum.discarded_norm() >= out.discarded_norm());
    }

    #[test]
    fn rejects_mismatched_operands() {
        let a = FourierOperator::constant(basis(), pauli::x()).unwrap();
        let b3 = FourierOperator::constant(basis(), linalg::identity::<f64>(3)).unwrap();
        assert!(matches!(a.commutator(&b3), Err(Error::DimensionMismatch(2, 3))));
        let other = FourierOperator::constant(FrequencyBasis::two(1.0, 0.5).unwrap(), pauli::x()).unwrap();
        assert!(matches!(a.commutator(&other), Err(Error::BasisMismatch)));
        assert!(FrequencyBasis::<f64>::new(vec![1.0]).is_err());
        assert!(FrequencyBasis::<f64>::new(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn record_round_trip() {
        let b = basis();
        let a = FourierOperator::from_terms(
            b,
            2,
            [
                (ModeIndex::from([1, -1]), pauli::plus() * Complex::new(0.3, -0.2)),
                (ModeIndex::from([0, 0]), pauli::z()),
            ],
        )
        .unwrap();
        let json = a.to_json().unwrap();
        let back = FourierOperator::<f64>::from_json(&json).unwrap();
        assert!(a.distance(&back) < 1e-15);
        assert_eq!(back.caps(), a.caps());
    }

    #[test]
    fn works_in_single_precision() {
        let b = FrequencyBasis::<f32>::two(1.0, 0.3).unwrap();
        let x = CMatrix::<f32>::from_row_slice(2, 2, &[Complex::new(0.0, 0.0), Complex::new(1.0, 0.0), Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]);
        let a = FourierOperator::from_terms(b, 2, [(ModeIndex::from([1, 0]), x.clone()), (ModeIndex::from([-1, 0]), x)]).unwrap();
        let v = a.evaluate_at(0.0);
        assert!((v[(0, 1)].re - 2.0).abs() < 1e-6);
        assert!(a.is_hermitian_series(1e-6));
    }
}
