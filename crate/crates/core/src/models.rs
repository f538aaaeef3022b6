//! Validation models and polychromatic drives.
//!
//! Both lattice models are built directly as matrices in the
//! zero-quasi-momentum sector of the periodic chain.
//!
//! Conventions:
//!
//! * Bonds run over `(i, i+1 mod L)` for `i = 0..L`. For `L = 2` each bond
//!   therefore appears twice (so `sum sz sz` has eigenvalues `+-2`).
//! * Spins: bit `i` of a basis state is 0 for `sz = +1` and 1 for `sz = -1`.
//!   Operators are Pauli matrices, not spin-1/2 halves. `sy sy` flips both
//!   spins with amplitude `-1` when they are equal and `+1` otherwise.
//! * Fermions: mode `i` is `(site i, up)` and mode `L + i` is
//!   `(site i, down)`. Basis states are `prod c^dag_k |0>` with `k`
//!   increasing. Translation `T c^dag_(i,s) T^-1 = c^dag_(i+1,s)` moves an
//!   occupied site `L-1` to the front of its species block and picks up
//!   `(-1)^(N_s - 1)`. The same sign appears on the wrap-around hop.
//! * The hopping operator is `-sum_(i,s) (c^dag_(i+1,s) c_(i,s) + h.c.)`, so
//!   `H = J(t) O_hop + U(t) O_int`.
//!
//! Zero-momentum states are `|r~> = R^(-1/2) sum_(j<R) T^j |r>` for orbit
//! representatives `r` of period `R`; representatives with `T^R |r> = -|r>`
//! have no zero-momentum component and are dropped. Matrix elements are
//! `<s~|O|r~> = sum_(x -> s) c_x chi_x sqrt(R_r / R_s)` where `O|r> = sum c_x |x>`
//! and `T^d |s> = chi_x |x>`.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{FourierOperator, FrequencyBasis, ModeIndex};
use crate::scalar::CMatrix;

/// Largest sector dimension the dense builders accept.
pub const MAX_SECTOR_DIM: usize = 4096;

/// Scalar drive `gamma * w1 * sum_pq A_pq exp(i (p w1 + q w2) t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub gamma_strength: f64,
    pub m1: i32,
    pub m2: i32,
    pub seed: Option<u64>,
    /// Coefficients `A_pq`, keyed by `(p, q)`.
    pub coeffs: BTreeMap<(i32, i32), Complex64>,
}

impl DriveSpec {
    /// Drive from an explicit table; `A_(-p,-q) = conj(A_pq)` is required.
    pub fn new(gamma_strength: f64, coeffs: BTreeMap<(i32, i32), Complex64>) -> Result<Self> {
        let m1 = coeffs.keys().map(|k| k.0.abs()).max().unwrap_or(0);
        let m2 = coeffs.keys().map(|k| k.1.abs()).max().unwrap_or(0);
        let d = DriveSpec { gamma_strength, m1, m2, seed: None, coeffs };
        let defect = d.reality_defect();
        if defect > 1e-14 * (1.0 + d.coefficient_norm()) {
            return Err(Error::InvalidArgument(format!(
                "drive coefficients are not conjugate-symmetric (defect {defect:e})"
            )));
        }
        Ok(d)
    }

    /// Time-independent drive `gamma * w1 * a`.
    pub fn constant(gamma_strength: f64, a: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((0, 0), Complex64::new(a, 0.0));
        DriveSpec { gamma_strength, m1: 0, m2: 0, seed: None, coeffs }
    }

    pub fn coefficient(&self, p: i32, q: i32) -> Complex64 {
        self.coeffs.get(&(p, q)).copied().unwrap_or_default()
    }

    pub fn with_gamma(&self, gamma_strength: f64) -> Self {
        DriveSpec { gamma_strength, ..self.clone() }
    }

    /// Largest `|A_(-p,-q) - conj(A_pq)|`.
    pub fn reality_defect(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(p, q), a)| (self.coefficient(-p, -q) - a.conj()).norm())
            .fold(0.0, f64::max)
    }

    fn coefficient_norm(&self) -> f64 {
        self.coeffs.values().map(|a| a.norm()).sum()
    }

    /// Drive value at `t`; real up to rounding for a valid table.
    pub fn value(&self, basis: &FrequencyBasis<f64>, t: f64) -> Complex64 {
        let (w1, w2) = (basis.omegas()[0], basis.omegas()[1]);
        let s: Complex64 = self
            .coeffs
            .iter()
            .map(|(&(p, q), a)| a * Complex64::from_polar(1.0, (p as f64 * w1 + q as f64 * w2) * t))
            .sum();
        s * (self.gamma_strength * w1)
    }

    /// Value with all `q` modes collapsed onto `q = 0`, i.e. a single
    /// frequency drive at `w1`.
    pub fn value_single_frequency(&self, w1: f64, t: f64) -> Complex64 {
        let s: Complex64 = self
            .coeffs
            .iter()
            .map(|(&(p, _), a)| a * Complex64::from_polar(1.0, p as f64 * w1 * t))
            .sum();
        s * (self.gamma_strength * w1)
    }
}

/// Random conjugate-symmetric table with `|p| <= m1`, `|q| <= m2`. Real and
/// imaginary parts on the half-space `p > 0` or `p = 0, q > 0` are uniform
/// in `[-0.5, 0.5]`; `A_00` is real.
pub fn random_drive(gamma_strength: f64, m1: i32, m2: i32, seed: u64) -> DriveSpec {
    assert!(m1 >= 0 && m2 >= 0, "mode widths must be nonnegative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = BTreeMap::new();
    coeffs.insert((0, 0), Complex64::new(rng.gen_range(-0.5..=0.5), 0.0));
    for p in 0..=m1 {
        for q in -m2..=m2 {
            if p == 0 && q <= 0 {
                continue;
            }
            let a = Complex64::new(rng.gen_range(-0.5..=0.5), rng.gen_range(-0.5..=0.5));
            coeffs.insert((p, q), a);
            coeffs.insert((-p, -q), a.conj());
        }
    }
    DriveSpec { gamma_strength, m1, m2, seed: Some(seed), coeffs }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    SpinChain,
    FermiHubbard { n_up: usize, n_down: usize },
}

/// Which states the operator matrices act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    ZeroMomentum,
    /// Full fixed-particle-number (or full spin) space, no momentum projection.
    Unprojected,
}

#[derive(Clone, Debug)]
pub struct ModelInstance {
    pub kind: ModelKind,
    pub l: usize,
    pub sector: Sector,
    pub dim: usize,
    /// Static operators multiplying each drive, with a short name.
    pub operators: Vec<(String, CMatrix<f64>)>,
}

impl ModelInstance {
    pub fn operator(&self, name: &str) -> Option<&CMatrix<f64>> {
        self.operators.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }
}

/// Action of an operator on one basis state: list of `(image, amplitude)`.
type Action<'a> = dyn Fn(u64) -> Vec<(u64, f64)> + 'a;

struct Lattice {
    l: usize,
    states: Vec<u64>,
    translate: Box<dyn Fn(u64) -> (u64, f64)>,
}

fn bit(s: u64, i: usize) -> bool {
    (s >> i) & 1 == 1
}

fn spin_lattice(l: usize) -> Lattice {
    let states = (0..1u64 << l).collect();
    let translate = Box::new(move |s: u64| {
        let top = (s >> (l - 1)) & 1;
        (((s << 1) | top) & ((1u64 << l) - 1), 1.0)
    });
    Lattice { l, states, translate }
}

fn fermion_lattice(l: usize, n_up: usize, n_down: usize) -> Lattice {
    let block = (1u64 << l) - 1;
    let mut states = Vec::new();
    for up in 0..1u64 << l {
        if up.count_ones() as usize != n_up {
            continue;
        }
        for down in 0..1u64 << l {
            if down.count_ones() as usize == n_down {
                states.push(up | (down << l));
            }
        }
    }
    states.sort_unstable();
    let translate = Box::new(move |s: u64| {
        let mut sign = 1.0;
        let mut out = 0;
        for (shift, count) in [(0, n_up), (l, n_down)] {
            let b = (s >> shift) & block;
            let top = (b >> (l - 1)) & 1;
            if top == 1 && count % 2 == 0 {
                sign = -sign;
            }
            out |= (((b << 1) | top) & block) << shift;
        }
        (out, sign)
    });
    Lattice { l, states, translate }
}

struct SectorBasis {
    /// Representatives with their period.
    reps: Vec<(u64, usize)>,
    /// For every state `x` in an admissible orbit: (rep index, chi_x).
    lookup: HashMap<u64, (usize, f64)>,
}

fn zero_momentum_basis(lat: &Lattice) -> SectorBasis {
    let mut seen: HashMap<u64, ()> = HashMap::new();
    let mut reps = Vec::new();
    let mut lookup = HashMap::new();
    for &s in &lat.states {
        if seen.contains_key(&s) {
            continue;
        }
        // Walk the orbit from s, then restart it from its minimum so that
        // representatives are canonical.
        let mut orbit = vec![s];
        let mut x = (lat.translate)(s).0;
        while x != s {
            orbit.push(x);
            x = (lat.translate)(x).0;
        }
        let rep = *orbit.iter().min().expect("nonempty orbit");
        for &o in &orbit {
            seen.insert(o, ());
        }
        let period = orbit.len();
        let mut chis = Vec::with_capacity(period);
        let mut chi = 1.0;
        let mut x = rep;
        for _ in 0..period {
            chis.push((x, chi));
            let (nx, sgn) = (lat.translate)(x);
            chi *= sgn;
            x = nx;
        }
        debug_assert_eq!(x, rep);
        debug_assert!(lat.l % period == 0);
        if chi < 0.0 {
            continue;
        }
        let idx = reps.len();
        reps.push((rep, period));
        for (x, c) in chis {
            lookup.insert(x, (idx, c));
        }
    }
    // Sort representatives so the basis order does not depend on traversal.
    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by_key(|&i| reps[i].0);
    let mut remap = vec![0; reps.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let reps_sorted = order.iter().map(|&i| reps[i]).collect();
    for v in lookup.values_mut() {
        v.0 = remap[v.0];
    }
    SectorBasis { reps: reps_sorted, lookup }
}

fn project(basis: &SectorBasis, op: &Action) -> CMatrix<f64> {
    let n = basis.reps.len();
    let mut m = CMatrix::<f64>::zeros(n, n);
    for (col, &(r, rr)) in basis.reps.iter().enumerate() {
        for (x, c) in op(r) {
            if let Some(&(row, chi)) = basis.lookup.get(&x) {
                let rs = basis.reps[row].1;
                m[(row, col)] += Complex64::new(c * chi * (rr as f64 / rs as f64).sqrt(), 0.0);
            }
        }
    }
    m
}

fn full(states: &[u64], op: &Action) -> CMatrix<f64> {
    let index: HashMap<u64, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let n = states.len();
    let mut m = CMatrix::<f64>::zeros(n, n);
    for (col, &s) in states.iter().enumerate() {
        for (x, c) in op(s) {
            let row = *index.get(&x).expect("operator leaves the state space");
            m[(row, col)] += Complex64::new(c, 0.0);
        }
    }
    m
}

fn build(lat: &Lattice, sector: Sector, ops: &[(&str, &Action)]) -> Result<(usize, Vec<(String, CMatrix<f64>)>)> {
    match sector {
        Sector::ZeroMomentum => {
            let basis = zero_momentum_basis(lat);
            let dim = basis.reps.len();
            if dim == 0 {
                return Err(Error::EmptySector);
            }
            if dim > MAX_SECTOR_DIM {
                return Err(Error::SectorTooLarge(dim));
            }
            Ok((dim, ops.iter().map(|(n, op)| (n.to_string(), project(&basis, op))).collect()))
        }
        Sector::Unprojected => {
            let dim = lat.states.len();
            if dim == 0 {
                return Err(Error::EmptySector);
            }
            if dim > MAX_SECTOR_DIM {
                return Err(Error::SectorTooLarge(dim));
            }
            Ok((dim, ops.iter().map(|(n, op)| (n.to_string(), full(&lat.states, op))).collect()))
        }
    }
}

/// Spin chain with operators `x = sum sx`, `zz = sum sz sz`, `yy = sum sy sy`.
pub fn build_spin_chain(l: usize) -> Result<ModelInstance> {
    build_spin_chain_in(l, Sector::ZeroMomentum)
}

pub fn build_spin_chain_in(l: usize, sector: Sector) -> Result<ModelInstance> {
    if !(2..=30).contains(&l) {
        return Err(Error::InvalidArgument(format!("spin chain needs 2 <= L <= 30, got {l}")));
    }
    let lat = spin_lattice(l);
    let sx = move |s: u64| (0..l).map(|i| (s ^ (1 << i), 1.0)).collect::<Vec<_>>();
    let zz = move |s: u64| {
        let v: f64 = (0..l)
            .map(|i| if bit(s, i) == bit(s, (i + 1) % l) { 1.0 } else { -1.0 })
            .sum();
        vec![(s, v)]
    };
    let yy = move |s: u64| {
        (0..l)
            .map(|i| {
                let j = (i + 1) % l;
                let amp = if bit(s, i) == bit(s, j) { -1.0 } else { 1.0 };
                (s ^ (1 << i) ^ (1 << j), amp)
            })
            .collect::<Vec<_>>()
    };
    let (dim, operators) = build(&lat, sector, &[("x", &sx), ("zz", &zz), ("yy", &yy)])?;
    Ok(ModelInstance { kind: ModelKind::SpinChain, l, sector, dim, operators })
}

/// `c^dag_a c_b |s>` with Jordan-Wigner signs, if nonzero.
fn hop(s: u64, a: usize, b: usize) -> Option<(u64, f64)> {
    if !bit(s, b) || (a != b && bit(s, a)) {
        return None;
    }
    let below = |x: u64, k: usize| (x & ((1u64 << k) - 1)).count_ones();
    let t = s & !(1 << b);
    let sign_b = below(s, b);
    let sign_a = below(t, a);
    let out = t | (1 << a);
    let sign = if (sign_a + sign_b) % 2 == 0 { 1.0 } else { -1.0 };
    Some((out, sign))
}

/// Fermi-Hubbard chain with operators `hop = -sum (c^dag_(i+1) c_i + h.c.)`
/// and `int = sum n_up n_down`.
pub fn build_fermi_hubbard(l: usize, n_up: usize, n_down: usize) -> Result<ModelInstance> {
    build_fermi_hubbard_in(l, n_up, n_down, Sector::ZeroMomentum)
}

pub fn build_fermi_hubbard_in(l: usize, n_up: usize, n_down: usize, sector: Sector) -> Result<ModelInstance> {
    if !(2..=16).contains(&l) {
        return Err(Error::InvalidArgument(format!("Hubbard chain needs 2 <= L <= 16, got {l}")));
    }
    if n_up > l || n_down > l {
        return Err(Error::EmptySector);
    }
    let lat = fermion_lattice(l, n_up, n_down);
    let hopping = move |s: u64| {
        let mut out = Vec::new();
        for species in [0, l] {
            for i in 0..l {
                let a = species + (i + 1) % l;
                let b = species + i;
                for (x, y) in [(a, b), (b, a)] {
                    if let Some((t, sign)) = hop(s, x, y) {
                        out.push((t, -sign));
                    }
                }
            }
        }
        out
    };
    let interaction = move |s: u64| {
        let d = (0..l).filter(|&i| bit(s, i) && bit(s, l + i)).count();
        vec![(s, d as f64)]
    };
    let (dim, operators) = build(&lat, sector, &[("hop", &hopping), ("int", &interaction)])?;
    Ok(ModelInstance { kind: ModelKind::FermiHubbard { n_up, n_down }, l, sector, dim, operators })
}

fn check_drives(model: &ModelInstance, drives: &[DriveSpec]) -> Result<()> {
    if drives.len() != model.operators.len() {
        return Err(Error::InvalidArgument(format!(
            "{} drives for {} operators",
            drives.len(),
            model.operators.len()
        )));
    }
    Ok(())
}

/// `term(p, q) = sum_k A^k_pq gamma^k w1 O_k`.
pub fn assemble_fourier_hamiltonian(
    model: &ModelInstance,
    drives: &[DriveSpec],
    basis: &FrequencyBasis<f64>,
) -> Result<FourierOperator<f64>> {
    check_drives(model, drives)?;
    if basis.len() != 2 {
        return Err(Error::InvalidBasis("model drives are bichromatic".into()));
    }
    let w1 = basis.driving();
    let mut terms = Vec::new();
    for ((_, op), d) in model.operators.iter().zip(drives) {
        for (&(p, q), a) in &d.coeffs {
            terms.push((ModeIndex::from([p, q]), op * (a * d.gamma_strength * w1)));
        }
    }
    FourierOperator::from_terms(basis.clone(), model.dim, terms)
}

/// Single-frequency limit `w2 -> 0`: every `(p, q)` coefficient is moved to
/// `(p, 0)`. The second basis frequency is a placeholder and carries no
/// modes.
pub fn assemble_single_frequency(model: &ModelInstance, drives: &[DriveSpec], w1: f64) -> Result<FourierOperator<f64>> {
    check_drives(model, drives)?;
    let basis = FrequencyBasis::two(w1, w1)?;
    let mut terms = Vec::new();
    for ((_, op), d) in model.operators.iter().zip(drives) {
        for (&(p, _), a) in &d.coeffs {
            terms.push((ModeIndex::from([p, 0]), op * (a * d.gamma_strength * w1)));
        }
    }
    FourierOperator::from_terms(basis, model.dim, terms)
}

/// Direct `sum_k d_k(t) O_k`.
pub fn evaluate_direct(model: &ModelInstance, drives: &[DriveSpec], basis: &FrequencyBasis<f64>, t: f64) -> CMatrix<f64> {
    let mut m = CMatrix::<f64>::zeros(model.dim, model.dim);
    for ((_, op), d) in model.operators.iter().zip(drives) {
        m += op * d.value(basis, t);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, frobenius, hermitian_defect};
    use nalgebra::DMatrix;

    fn eigenvalues(m: &CMatrix<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn constant_drive_is_one_real_coefficient() {
        let d = random_drive(0.02, 0, 0, 9);
        assert_eq!(d.coeffs.len(), 1);
        assert_eq!(d.coefficient(0, 0).im, 0.0);
    }

    #[test]
    fn random_drive_is_deterministic_and_real() {
        let a = random_drive(0.02, 3, 2, 42);
        assert_eq!(a, random_drive(0.02, 3, 2, 42));
        assert_ne!(a, random_drive(0.02, 3, 2, 43));
        assert_eq!(a.coeffs.len(), 7 * 5);
        assert!(a.coeffs.values().all(|c| c.re.abs() <= 0.5 && c.im.abs() <= 0.5));
        let b = FrequencyBasis::two(1.0, 1.0 / 7f64.sqrt()).unwrap();
        let mut max_im: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for k in 0..2000 {
            let v = a.value(&b, k as f64 * 0.037);
            max_im = max_im.max(v.im.abs());
            max_abs = max_abs.max(v.norm());
        }
        assert!(max_im < 1e-14 * max_abs.max(1.0));
    }

    #[test]
    fn table_must_be_conjugate_symmetric() {
        let mut c = BTreeMap::new();
        c.insert((1, 0), Complex64::new(0.1, 0.2));
        assert!(DriveSpec::new(1.0, c.clone()).is_err());
        c.insert((-1, 0), Complex64::new(0.1, -0.2));
        assert!(DriveSpec::new(1.0, c).is_ok());
    }

    #[test]
    fn two_site_zz_has_doubled_eigenvalues() {
        let m = build_spin_chain_in(2, Sector::Unprojected).unwrap();
        let ev = eigenvalues(m.operator("zz").unwrap());
        assert_eq!(ev, vec![-2.0, -2.0, 2.0, 2.0]);
    }

    /// Brute-force count of zero-momentum states: orbits under cyclic shift
    /// whose translation character is trivial.
    fn necklaces(l: usize) -> usize {
        let mut seen = vec![false; 1 << l];
        let mut count = 0;
        for s in 0..1usize << l {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut x = s;
            loop {
                seen[x] = true;
                x = ((x << 1) | (x >> (l - 1))) & ((1 << l) - 1);
                if x == s {
                    break;
                }
            }
        }
        count
    }

    #[test]
    fn sector_dimension_counts_necklaces() {
        for l in [3, 4, 6, 8] {
            assert_eq!(build_spin_chain(l).unwrap().dim, necklaces(l));
        }
        assert_eq!(build_spin_chain(8).unwrap().dim, 36);
    }

    #[test]
    fn spin_operators_hermitian_and_noncommuting() {
        let m = build_spin_chain(4).unwrap();
        for (_, op) in &m.operators {
            assert!(hermitian_defect(op) < 1e-14);
        }
        let ops: Vec<_> = m.operators.iter().map(|(_, o)| o).collect();
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(frobenius(&commutator(ops[i], ops[j])) > 1e-3);
            }
        }
    }

    /// Cyclic translation as a matrix on the unprojected space.
    fn translation_matrix(lat: &Lattice) -> CMatrix<f64> {
        let index: HashMap<u64, usize> = lat.states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let n = lat.states.len();
        let mut t = CMatrix::<f64>::zeros(n, n);
        for (col, &s) in lat.states.iter().enumerate() {
            let (x, sign) = (lat.translate)(s);
            t[(index[&x], col)] = Complex64::new(sign, 0.0);
        }
        t
    }

    #[test]
    fn operators_commute_with_translation() {
        for l in [3, 4, 5, 6] {
            let m = build_spin_chain_in(l, Sector::Unprojected).unwrap();
            let t = translation_matrix(&spin_lattice(l));
            for (_, op) in &m.operators {
                assert!(frobenius(&commutator(op, &t)) < 1e-12);
            }
        }
        for (l, u, d) in [(3, 1, 2), (4, 2, 1), (4, 2, 2), (5, 2, 3)] {
            let m = build_fermi_hubbard_in(l, u, d, Sector::Unprojected).unwrap();
            let t = translation_matrix(&fermion_lattice(l, u, d));
            for (_, op) in &m.operators {
                assert!(frobenius(&commutator(op, &t)) < 1e-12, "L={l} {u} {d}");
            }
        }
    }

    /// Zero-momentum projector built from the translation matrix; its
    /// nonzero spectrum must match the sector operator's spectrum.
    #[test]
    fn projected_spectrum_matches_projector_oracle() {
        for (l, u, d) in [(4, 2, 1), (4, 1, 1), (5, 2, 2), (6, 1, 2)] {
            let lat = fermion_lattice(l, u, d);
            let t = translation_matrix(&lat);
            let n = lat.states.len();
            let mut p = CMatrix::<f64>::zeros(n, n);
            let mut tj = CMatrix::<f64>::identity(n, n);
            for _ in 0..l {
                p += &tj;
                tj = &t * tj;
            }
            p /= Complex64::new(l as f64, 0.0);
            let full = build_fermi_hubbard_in(l, u, d, Sector::Unprojected).unwrap();
            let sec = build_fermi_hubbard(l, u, d).unwrap();
            let rank = eigenvalues(&p).iter().filter(|&&e| e > 0.5).count();
            assert_eq!(rank, sec.dim, "L={l} {u} {d}");
            for name in ["hop", "int"] {
                // Shift by a large constant so the projected-out zeros separate.
                let shift = CMatrix::<f64>::identity(n, n) * Complex64::new(100.0, 0.0);
                let a = &p * (full.operator(name).unwrap() + &shift) * &p;
                let mut ev: Vec<f64> = eigenvalues(&a).into_iter().filter(|e| e.abs() > 1e-8).map(|e| e - 100.0).collect();
                ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let want = eigenvalues(sec.operator(name).unwrap());
                assert_eq!(ev.len(), want.len());
                for (x, y) in ev.iter().zip(&want) {
                    assert!((x - y).abs() < 1e-10, "L={l} {name}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn interaction_counts_double_occupancy() {
        let m = build_fermi_hubbard(6, 1, 2).unwrap();
        let int = m.operator("int").unwrap();
        for i in 0..m.dim {
            for j in 0..m.dim {
                let v = int[(i, j)];
                if i == j {
                    assert!(v.re >= 0.0 && v.re.fract() == 0.0 && v.im == 0.0);
                } else {
                    assert_eq!(v.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn two_site_hopping_by_hand() {
        // Basis |up at a, down at b>; the doubled bond gives -2 (c^dag_1 c_0 + h.c.) per species.
        let m = build_fermi_hubbard_in(2, 1, 1, Sector::Unprojected).unwrap();
        let ev = eigenvalues(m.operator("hop").unwrap());
        let want = [-4.0, 0.0, 0.0, 4.0];
        for (x, y) in ev.iter().zip(want) {
            assert!((x - y).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn hopping_conserves_particle_numbers() {
        let l = 4;
        let lat = fermion_lattice(l, 2, 1);
        let m = build_fermi_hubbard_in(l, 2, 1, Sector::Unprojected).unwrap();
        // Species-resolved number operators on the full space of all fillings.
        let all: Vec<u64> = (0..1u64 << (2 * l)).collect();
        let hop_all = full(&all, &|s| {
            let mut out = Vec::new();
            for species in [0, l] {
                for i in 0..l {
                    let a = species + (i + 1) % l;
                    let b = species + i;
                    for (x, y) in [(a, b), (b, a)] {
                        if let Some((t, sign)) = hop(s, x, y) {
                            out.push((t, -sign));
                        }
                    }
                }
            }
            out
        });
        for shift in [0, l] {
            let n = DMatrix::from_fn(all.len(), all.len(), |i, j| {
                if i == j {
                    Complex64::new(((all[i] >> shift) & ((1 << l) - 1)).count_ones() as f64, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            assert!(frobenius(&commutator(&hop_all, &n)) < 1e-14);
        }
        assert_eq!(m.dim, lat.states.len());
    }

    #[test]
    fn assembled_series_matches_direct_sum() {
        let model = build_spin_chain(5).unwrap();
        let drives: Vec<_> = (0..3).map(|k| random_drive(0.05, 2, 1, 100 + k)).collect();
        let b = FrequencyBasis::two(3.0, 3.0 * 0.414).unwrap();
        let h = assemble_fourier_hamiltonian(&model, &drives, &b).unwrap();
        assert!(h.is_hermitian_series(1e-14));
        for k in 0..20 {
            let t = 0.173 * k as f64;
            let d = frobenius(&(h.evaluate_at(t) - evaluate_direct(&model, &drives, &b, t)));
            assert!(d < 1e-12);
        }
        let stat: Vec<_> = (0..3).map(|k| DriveSpec::constant(0.1, k as f64)).collect();
        let hs = assemble_fourier_hamiltonian(&model, &stat, &b).unwrap();
        assert_eq!(hs.len(), 1);
        assert!(hs.modes().all(|m| m.is_zero()));
    }

    #[test]
    fn single_frequency_collapse_matches_limit() {
        let model = build_spin_chain(4).unwrap();
        let drives: Vec<_> = (0..3).map(|k| random_drive(0.05, 2, 2, 7 + k)).collect();
        let h = assemble_single_frequency(&model, &drives, 2.0).unwrap();
        assert!(h.modes().all(|m| m.components()[1] == 0));
        let tiny = FrequencyBasis::two(2.0, 1e-15).unwrap();
        for t in [0.0, 0.4, 1.3] {
            let d = frobenius(&(h.evaluate_at(t) - evaluate_direct(&model, &drives, &tiny, t)));
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn empty_sector_and_budget() {
        assert!(build_fermi_hubbard(3, 4, 0).is_err());
        assert!(matches!(build_spin_chain_in(13, Sector::Unprojected), Err(Error::SectorTooLarge(8192))));
    }
}
