//! Shaken honeycomb lattice: shaking Fourier tables, effective lattice
//! parameters under an exponential tunnelling quench, fine-tuning of the
//! shaking for isotropic nearest-neighbour tunnelling, and Chern numbers.
//!
//! Shaking tone `a` (1-based) runs at `a * w1`, so the lattice phase
//! `exp(i q_lat(t) . a_k)` is `2 pi / w1` periodic and its Fourier table
//! `l_k^(m)` is indexed by a single integer. The tunnelling rate is
//! `J(t) = J0 exp(-gamma t)`, hence `dJ/dt = -gamma J` throughout.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeGeometry {
    /// Nearest-neighbour vectors from sub-lattice A to B.
    pub a: [[f64; 2]; 3],
    /// Next-nearest-neighbour vectors, `b_1 = a_2 - a_3` and cyclic.
    pub b: [[f64; 2]; 3],
}

impl LatticeGeometry {
    pub fn from_nearest(a: [[f64; 2]; 3]) -> Self {
        let d = |i: usize, j: usize| [a[i][0] - a[j][0], a[i][1] - a[j][1]];
        LatticeGeometry { a, b: [d(1, 2), d(2, 0), d(0, 1)] }
    }

    /// Unit bond length, `a_1` along `+y`.
    pub fn honeycomb() -> Self {
        let h = 3f64.sqrt() / 2.0;
        LatticeGeometry::from_nearest([[0.0, 1.0], [-h, -0.5], [h, -0.5]])
    }
}

impl Default for LatticeGeometry {
    fn default() -> Self {
        LatticeGeometry::honeycomb()
    }
}

/// Harmonic shaking: tone `a` has amplitude `q[a-1]`, frequency `a * w1`
/// and phases `delta[a-1]` (x) and `delta_prime[a-1]` (y).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShakingProfile {
    pub omega1: f64,
    pub q: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_prime: Vec<f64>,
}

impl ShakingProfile {
    pub fn new(omega1: f64, q: Vec<f64>, delta: Vec<f64>, delta_prime: Vec<f64>) -> Result<Self> {
        if !(omega1 > 0.0 && omega1.is_finite()) {
            return Err(Error::InvalidArgument("shaking frequency must be positive".into()));
        }
        if q.len() != delta.len() || q.len() != delta_prime.len() {
            return Err(Error::InvalidArgument("q, delta and delta' need one entry per tone".into()));
        }
        if q.iter().chain(&delta).chain(&delta_prime).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("shaking parameters must be finite".into()));
        }
        Ok(ShakingProfile { omega1, q, delta, delta_prime }.wrapped())
    }

    pub fn unshaken(omega1: f64) -> Self {
        ShakingProfile { omega1, q: vec![], delta: vec![], delta_prime: vec![] }
    }

    pub fn tones(&self) -> usize {
        self.q.len()
    }

    fn wrapped(mut self) -> Self {
        for p in self.delta.iter_mut().chain(self.delta_prime.iter_mut()) {
            *p = p.rem_euclid(2.0 * PI);
        }
        self
    }

    pub fn quasimomentum(&self, t: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for a in 0..self.tones() {
            let w = (a + 1) as f64 * self.omega1;
            out[0] += self.q[a] * (w * t - self.delta[a]).sin();
            out[1] += self.q[a] * (w * t - self.delta_prime[a]).sin();
        }
        out
    }
}

/// `l_k^(m)` for `|m| <= n_max`.
#[derive(Clone, Debug)]
pub struct TunnelingTable {
    n_max: i32,
    l: [Vec<Complex64>; 3],
    /// Quadrature sample count that met the tolerance.
    pub samples: usize,
}

impl TunnelingTable {
    pub fn n_max(&self) -> i32 {
        self.n_max
    }

    /// Zero outside the table.
    pub fn get(&self, k: usize, m: i32) -> Complex64 {
        if m.abs() > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.l[k][(m + self.n_max) as usize]
        }
    }

    /// `1 - sum_{|m| <= n} |l_k^(m)|^2`, maximised over `k`.
    pub fn tail_mass(&self, n: i32) -> f64 {
        (0..3)
            .map(|k| 1.0 - (-n..=n).map(|m| self.get(k, m).norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

const QUADRATURE_TOL: f64 = 1e-12;
const MAX_SAMPLES: usize = 1 << 16;

fn table_from_samples(profile: &ShakingProfile, geometry: &LatticeGeometry, n_max: i32, n: usize) -> [Vec<Complex64>; 3] {
    let period = 2.0 * PI / profile.omega1;
    let phases: Vec<[f64; 2]> = (0..n).map(|j| profile.quasimomentum(period * j as f64 / n as f64)).collect();
    let twiddle: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64)).collect();
    std::array::from_fn(|k| {
        let a = geometry.a[k];
        let f: Vec<Complex64> = phases.iter().map(|q| Complex64::from_polar(1.0, q[0] * a[0] + q[1] * a[1])).collect();
        (-n_max..=n_max)
            .map(|m| {
                let s: Complex64 = f
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * twiddle[(m as i64 * j as i64).rem_euclid(n as i64) as usize])
                    .sum();
                s / n as f64
            })
            .collect()
    })
}

/// Fourier components of `exp(i q_lat(t) . a_k)` by the trapezoid rule,
/// doubling the sample count until successive tables agree to `1e-12`.
pub fn tunneling_coefficients(profile: &ShakingProfile, geometry: &LatticeGeometry, n_max: i32) -> Result<TunnelingTable> {
    if n_max < 0 {
        return Err(Error::InvalidArgument("n_max must be non-negative".into()));
    }
    let mut n = (4 * n_max as usize + 4).next_power_of_two().max(32);
    let mut prev = table_from_samples(profile, geometry, n_max, n);
    loop {
        let next_n = 2 * n;
        if next_n > MAX_SAMPLES {
            return Err(Error::Quadrature { tol: QUADRATURE_TOL, change: f64::NAN });
        }
        let next = table_from_samples(profile, geometry, n_max, next_n);
        let change = prev
            .iter()
            .zip(&next)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max);
        if change < QUADRATURE_TOL {
            return Ok(TunnelingTable { n_max, l: next, samples: next_n });
        }
        if next_n * 2 > MAX_SAMPLES {
            return Err(Error::Quadrature { tol: QUADRATURE_TOL, change });
        }
        prev = next;
        n = next_n;
    }
}

/// Time-independent scalars of the effective lattice parameters. The
/// tilde families already include their `1/w1` factor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub c_delta: Complex64,
    pub c_delta_tilde: Complex64,
    pub d: [Complex64; 3],
    pub d_tilde: [Complex64; 3],
    pub e: [Complex64; 3],
    pub e_tilde: [Complex64; 3],
    pub delta: f64,
    pub omega1: f64,
    pub n_cut: i32,
}

/// `v(n, m) = sum_k l_k^(-n)* l_k^(m) - l_k^(n) l_k^(-m)*`.
pub fn v_sum(table: &TunnelingTable, n: i32, m: i32) -> Complex64 {
    (0..3)
        .map(|k| table.get(k, -n).conj() * table.get(k, m) - table.get(k, n) * table.get(k, -m).conj())
        .sum()
}

/// `p_k(n, m) = l_i^(m) l_j^(-n)* - l_i^(n) l_j^(-m)*`, `(k, i, j)` cyclic.
pub fn p_pair(table: &TunnelingTable, k: usize, n: i32, m: i32) -> Complex64 {
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    table.get(i, m) * table.get(j, -n).conj() - table.get(i, n) * table.get(j, -m).conj()
}

/// The `C`/`E` shaped sums shared by the on-site and next-nearest families.
fn paired_sums<F: Fn(i32, i32) -> Complex64>(f: F, n_cut: i32, omega1: f64) -> (Complex64, Complex64) {
    let nonzero = || (-n_cut..=n_cut).filter(|&n| n != 0);
    let plain: Complex64 = nonzero().map(|n| (f(n, 0) - f(n, -n) * 0.5) / n as f64).sum();
    let mut tilde: Complex64 = nonzero().map(|n| f(n, 0) * 3.0 / (n * n) as f64).sum();
    for m in nonzero() {
        for n in nonzero() {
            tilde += f(m, n) / (m * n) as f64;
            if n != m {
                tilde += f(n, m - n) / (m * n) as f64;
            }
        }
    }
    (plain, tilde * I / omega1)
}

/// Evaluates all coefficient families with sums truncated at `n_cut`. The
/// table must reach `2 n_cut` and carry tail mass below `1e-12` beyond
/// `n_cut`.
pub fn coefficient_set(table: &TunnelingTable, delta: f64, omega1: f64, n_cut: i32) -> Result<CoefficientSet> {
    if table.n_max() < 2 * n_cut {
        return Err(Error::InvalidArgument(format!("table reaches {} but sums need {}", table.n_max(), 2 * n_cut)));
    }
    let mass = table.tail_mass(n_cut);
    if mass > 1e-12 {
        return Err(Error::TailMass { mass, limit: 1e-12 });
    }
    Ok(coefficients_unchecked(table, delta, omega1, n_cut))
}

fn coefficients_unchecked(table: &TunnelingTable, delta: f64, omega1: f64, n_cut: i32) -> CoefficientSet {
    let (c_delta, c_delta_tilde) = paired_sums(|n, m| v_sum(table, n, m), n_cut, omega1);
    let mut e = [Complex64::default(); 3];
    let mut e_tilde = [Complex64::default(); 3];
    let mut d = [Complex64::default(); 3];
    let mut d_tilde = [Complex64::default(); 3];
    for k in 0..3 {
        (e[k], e_tilde[k]) = paired_sums(|n, m| p_pair(table, k, n, m), n_cut, omega1);
        let mut s = Complex64::default();
        let mut st = Complex64::default();
        for n in (-n_cut..=n_cut).filter(|&n| n != 0) {
            let l = table.get(k, n) / n as f64;
            s += l;
            st += l * (1.0 + 4.0 * delta / (n as f64 * omega1));
        }
        d[k] = table.get(k, 0) - s * (2.0 * delta / omega1);
        d_tilde[k] = st * I;
    }
    CoefficientSet { c_delta, c_delta_tilde, d, d_tilde, e, e_tilde, delta, omega1, n_cut }
}

impl CoefficientSet {
    fn families(&self) -> impl Iterator<Item = Complex64> + '_ {
        [self.c_delta, self.c_delta_tilde]
            .into_iter()
            .chain(self.d)
            .chain(self.d_tilde)
            .chain(self.e)
            .chain(self.e_tilde)
    }

    pub fn max_difference(&self, other: &CoefficientSet) -> f64 {
        self.families().zip(other.families()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `D_k + gamma_hat * D~_k` with the `1/w1` of `D~` folded into
    /// `gamma_hat = gamma / w1`.
    pub fn nearest(&self, gamma: f64) -> [Complex64; 3] {
        std::array::from_fn(|k| self.d[k] + self.d_tilde[k] * (gamma / self.omega1))
    }

    /// `E_k - gamma E~_k`.
    pub fn next_nearest(&self, gamma: f64) -> [Complex64; 3] {
        std::array::from_fn(|k| self.e[k] - self.e_tilde[k] * gamma)
    }

    pub fn tau1(&self, gamma: f64) -> f64 {
        (self.c_delta - self.c_delta_tilde * gamma).re
    }

    pub fn tau_tilde(&self, gamma: f64) -> [f64; 3] {
        self.next_nearest(gamma).map(|z| z.norm())
    }

    pub fn alpha(&self, gamma: f64) -> [f64; 3] {
        self.next_nearest(gamma).map(|z| z.arg())
    }

    /// `(kappa_+, kappa_-)`.
    pub fn kappa(&self, gamma: f64) -> (f64, f64) {
        let tau = self.tau_tilde(gamma);
        let alpha = self.alpha(gamma);
        let k = |sign: f64| self.tau1(gamma) + 2.0 * (0..3).map(|i| tau[i] * (alpha[i] + sign * 2.0 * PI / 3.0).cos()).sum::<f64>();
        (k(1.0), k(-1.0))
    }
}

/// Coefficients at increasing `n_cut` (doubling from `n_cut0`) until two
/// successive sets differ by less than `1e-10`.
pub fn converged_coefficients(
    profile: &ShakingProfile,
    geometry: &LatticeGeometry,
    delta: f64,
    n_cut0: i32,
) -> Result<CoefficientSet> {
    let mut n_cut = n_cut0.max(1);
    let mut prev: Option<CoefficientSet> = None;
    let (mut mass, mut drift) = (f64::NAN, f64::NAN);
    for _ in 0..6 {
        let table = tunneling_coefficients(profile, geometry, 2 * n_cut)?;
        mass = table.tail_mass(n_cut);
        if mass <= 1e-12 {
            let set = coefficient_set(&table, delta, profile.omega1, n_cut)?;
            if let Some(p) = &prev {
                drift = set.max_difference(p);
                if drift < 1e-10 {
                    return Ok(set);
                }
            }
            prev = Some(set);
        }
        n_cut *= 2;
    }
    if mass > 1e-12 || drift.is_nan() {
        Err(Error::TailMass { mass, limit: 1e-12 })
    } else {
        Err(Error::Quadrature { tol: 1e-10, change: drift })
    }
}

/// Exponential quench of the bare tunnelling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quench {
    pub j0: f64,
    /// Decay rate of `J(t)`, unrelated to drive strengths elsewhere.
    pub gamma: f64,
}

impl Quench {
    pub fn j(&self, t: f64) -> f64 {
        self.j0 * (-self.gamma * t).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectiveLatticeParams {
    pub t: f64,
    pub delta: f64,
    pub j: [Complex64; 3],
    pub g: [Complex64; 3],
}

pub fn effective_params(coeffs: &CoefficientSet, quench: &Quench, t: f64) -> EffectiveLatticeParams {
    let w1 = coeffs.omega1;
    let j = quench.j(t);
    let jdot = -quench.gamma * j;
    let delta = (Complex64::new(coeffs.delta, 0.0) - (coeffs.c_delta * (j * j) + coeffs.c_delta_tilde * (jdot * j)) / w1).re;
    EffectiveLatticeParams {
        t,
        delta,
        j: std::array::from_fn(|k| coeffs.d[k] * j - coeffs.d_tilde[k] * (jdot / w1)),
        g: std::array::from_fn(|k| -(coeffs.e[k] * (j * j) + coeffs.e_tilde[k] * (jdot * j)) / w1),
    }
}

/// Imaginary part of the effective on-site energy before it is dropped.
pub fn onsite_imaginary_part(coeffs: &CoefficientSet, quench: &Quench, t: f64) -> f64 {
    let j = quench.j(t);
    ((coeffs.c_delta * (j * j) - coeffs.c_delta_tilde * (quench.gamma * j * j)) / coeffs.omega1).im
}

impl EffectiveLatticeParams {
    /// `|J1 - J2| + |J1 - J3|` relative to `|J1|`.
    pub fn nearest_anisotropy(&self) -> f64 {
        ((self.j[0] - self.j[1]).norm() + (self.j[0] - self.j[2]).norm()) / self.j[0].norm()
    }

    /// `h_+-` from the effective on-site energy and next-nearest rates.
    pub fn h_pm(&self) -> (f64, f64) {
        let h = |sign: f64| {
            self.delta + 2.0 * self.g.iter().map(|g| g.norm() * (g.arg() + sign * 2.0 * PI / 3.0).cos()).sum::<f64>()
        };
        (h(1.0), h(-1.0))
    }
}

/// `h_+- = Delta - J^2 kappa_+- / w1`.
pub fn h_pm_kappa(coeffs: &CoefficientSet, quench: &Quench, t: f64) -> (f64, f64) {
    let (kp, km) = coeffs.kappa(quench.gamma);
    let s = quench.j(t).powi(2) / coeffs.omega1;
    (coeffs.delta - s * kp, coeffs.delta - s * km)
}

/// `C = (sgn h_+ - sgn h_-) / 2`; `|h| < gap_tol` is a phase boundary.
pub fn chern_from_h(h_plus: f64, h_minus: f64, gap_tol: f64) -> Result<i32> {
    if !(h_plus.abs() >= gap_tol && h_minus.abs() >= gap_tol) {
        return Err(Error::PhaseBoundary { h_plus, h_minus });
    }
    Ok(((h_plus.signum() - h_minus.signum()) / 2.0) as i32)
}

pub fn chern_number(params: &EffectiveLatticeParams, gap_tol: f64) -> Result<i32> {
    let (hp, hm) = params.h_pm();
    chern_from_h(hp, hm, gap_tol)
}

/// Default boundary tolerance `1e-8 * |Delta|`.
pub fn default_gap_tol(delta: f64) -> f64 {
    1e-8 * delta.abs()
}

#[derive(Clone, Copy, Debug)]
pub struct FineTuneOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub fd_step: f64,
    /// Starting cutoff; the solve runs at the converged cutoff of the seed.
    pub n_cut: i32,
}

impl Default for FineTuneOptions {
    fn default() -> Self {
        FineTuneOptions { tol: 1e-10, max_iterations: 60, fd_step: 1e-7, n_cut: 12 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FineTuneResult {
    pub profile: ShakingProfile,
    pub residual: f64,
    pub iterations: usize,
    pub coefficients: CoefficientSet,
}

/// Tone 1 stays fixed; the unknowns are `q_2, q_3` and the phase
/// differences `delta_a - delta'_a` of tones 2 and 3 (with `delta_a` kept).
fn with_unknowns(seed: &ShakingProfile, x: &Vector4<f64>) -> ShakingProfile {
    let mut p = seed.clone();
    p.q[1] = x[0];
    p.q[2] = x[1];
    p.delta_prime[1] = p.delta[1] - x[2];
    p.delta_prime[2] = p.delta[2] - x[3];
    p
}

fn unknowns(p: &ShakingProfile) -> Vector4<f64> {
    Vector4::new(p.q[1], p.q[2], p.delta[1] - p.delta_prime[1], p.delta[2] - p.delta_prime[2])
}

/// `[D1 + g D~1 - (D2 + g D~2), D1 + g D~1 - (D3 + g D~3)]` as four reals,
/// at a fixed cutoff so that the map stays smooth for Newton steps.
pub fn fine_tune_residual(
    profile: &ShakingProfile,
    geometry: &LatticeGeometry,
    delta: f64,
    gamma: f64,
    n_cut: i32,
) -> Result<Vector4<f64>> {
    let table = tunneling_coefficients(profile, geometry, 2 * n_cut)?;
    let t = coefficients_unchecked(&table, delta, profile.omega1, n_cut).nearest(gamma);
    let (r1, r2) = (t[0] - t[1], t[0] - t[2]);
    Ok(Vector4::new(r1.re, r1.im, r2.re, r2.im))
}

/// Damped Newton solve for isotropic effective nearest-neighbour
/// tunnelling under the quench rate `gamma`, starting from `seed` (three
/// tones; `q_2, q_3` nonzero).
pub fn solve_fine_tune(
    seed: &ShakingProfile,
    geometry: &LatticeGeometry,
    delta: f64,
    gamma: f64,
    opts: &FineTuneOptions,
) -> Result<FineTuneResult> {
    if seed.tones() != 3 {
        return Err(Error::InvalidArgument("fine tuning needs exactly three tones".into()));
    }
    let n_cut = converged_coefficients(seed, geometry, delta, opts.n_cut)?.n_cut;
    let f = |x: &Vector4<f64>| fine_tune_residual(&with_unknowns(seed, x), geometry, delta, gamma, n_cut);
    let mut x = unknowns(seed);
    let mut r = f(&x)?;
    let mut iterations = 0;
    while r.norm() >= opts.tol {
        if iterations == opts.max_iterations {
            return Err(Error::NoRoot { residual: r.norm(), iterations });
        }
        iterations += 1;
        let mut jac = Matrix4::zeros();
        for c in 0..4 {
            let mut xp = x;
            xp[c] += opts.fd_step;
            let mut xm = x;
            xm[c] -= opts.fd_step;
            jac.set_column(c, &((f(&xp)? - f(&xm)?) / (2.0 * opts.fd_step)));
        }
        let Some(step) = jac.lu().solve(&(-r)) else {
            return Err(Error::NoRoot { residual: r.norm(), iterations });
        };
        let mut scale = 1.0;
        loop {
            let trial = x + step * scale;
            // Steps into regions where the tables cannot be built count as
            // failed steps.
            if let Ok(rt) = f(&trial) {
                if rt.norm() < r.norm() {
                    x = trial;
                    r = rt;
                    break;
                }
            }
            scale *= 0.5;
            if scale < 1e-6 {
                return Err(Error::NoRoot { residual: r.norm(), iterations });
            }
        }
    }
    let profile = with_unknowns(seed, &x).wrapped();
    let coefficients = converged_coefficients(&profile, geometry, delta, opts.n_cut)?;
    let t = coefficients.nearest(gamma);
    let residual = (t[0] - t[1]).norm() + (t[0] - t[2]).norm();
    if !(residual < 10.0 * opts.tol) {
        return Err(Error::NoRoot { residual, iterations });
    }
    Ok(FineTuneResult { profile, residual, iterations, coefficients })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    /// `J^2 kappa_+ / (w1 Delta)`.
    pub x: f64,
    /// `J^2 kappa_- / (w1 Delta)`.
    pub y: f64,
    pub chern: i32,
    pub nearest_anisotropy: f64,
    /// Largest difference between the two `h_+-` evaluations, relative to
    /// `max(|h|, |Delta|)`.
    pub h_mismatch: f64,
}

fn diagram_point(coeffs: &CoefficientSet, quench: &Quench, t: f64, gap_tol: f64) -> Result<TrajectoryRow> {
    let params = effective_params(coeffs, quench, t);
    let (hp, hm) = params.h_pm();
    let (kp, km) = h_pm_kappa(coeffs, quench, t);
    let scale = coeffs.delta.abs().max(hp.abs()).max(hm.abs());
    let (kap_p, kap_m) = coeffs.kappa(quench.gamma);
    let s = quench.j(t).powi(2) / (coeffs.omega1 * coeffs.delta);
    Ok(TrajectoryRow {
        t,
        x: s * kap_p,
        y: s * kap_m,
        chern: chern_from_h(hp, hm, gap_tol)?,
        nearest_anisotropy: params.nearest_anisotropy(),
        h_mismatch: ((hp - kp).abs().max((hm - km).abs())) / scale,
    })
}

/// Path of the effective parameters through the `(x, y)` phase diagram.
pub fn quench_trajectory(coeffs: &CoefficientSet, quench: &Quench, times: &[f64], gap_tol: f64) -> Result<Vec<TrajectoryRow>> {
    times.iter().map(|&t| diagram_point(coeffs, quench, t, gap_tol)).collect()
}

/// Phase-diagram samples over a grid of physical controls: the initial
/// tunnelling `J0` runs over `j0_values` and the tone-1 phase difference
/// `delta_1 - delta'_1` over `phases`, each evaluated at `t = 0`. Rows are
/// in grid order (phase outer, `J0` inner).
pub fn phase_diagram(
    base: &ShakingProfile,
    geometry: &LatticeGeometry,
    delta: f64,
    gamma: f64,
    j0_values: &[f64],
    phases: &[f64],
    n_cut: i32,
) -> Result<Vec<TrajectoryRow>> {
    if base.tones() == 0 {
        return Err(Error::InvalidArgument("phase diagram needs at least one shaking tone".into()));
    }
    let gap_tol = default_gap_tol(delta);
    let rows: Vec<Result<Vec<TrajectoryRow>>> = phases
        .par_iter()
        .map(|&phi| {
            let mut p = base.clone();
            p.delta_prime[0] = p.delta[0] - phi;
            let c = converged_coefficients(&p.wrapped(), geometry, delta, n_cut)?;
            j0_values.iter().map(|&j0| diagram_point(&c, &Quench { j0, gamma }, 0.0, gap_tol)).collect()
        })
        .collect();
    Ok(rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bessel(m: i32, x: f64) -> f64 {
        let n = m.unsigned_abs() as i32;
        let mut term = (x / 2.0).powi(n) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut sum = term;
        for k in 1..60 {
            term *= -(x * x / 4.0) / (k as f64 * (k + n) as f64);
            sum += term;
        }
        if m < 0 && n % 2 == 1 {
            -sum
        } else {
            sum
        }
    }

    fn random_profile(seed: u64) -> ShakingProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = |lo: f64, hi: f64| (0..3).map(|_| rng.gen_range(lo..hi)).collect::<Vec<_>>();
        ShakingProfile::new(10.0, v(0.2, 1.5), v(0.0, 2.0 * PI), v(0.0, 2.0 * PI)).unwrap()
    }

    #[test]
    fn geometry_invariants() {
        let g = LatticeGeometry::honeycomb();
        for c in 0..2 {
            assert!(g.a.iter().map(|a| a[c]).sum::<f64>().abs() < 1e-15);
        }
        for b in g.b {
            assert!((b[0].hypot(b[1]) - 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn quasimomentum_examples() {
        let p = ShakingProfile::new(2.0, vec![0.7], vec![0.0], vec![0.0]).unwrap();
        let q = p.quasimomentum(0.4);
        assert!((q[0] - 0.7 * (0.8f64).sin()).abs() < 1e-15 && q[0] == q[1]);
        assert_eq!(ShakingProfile::unshaken(1.0).quasimomentum(3.0), [0.0, 0.0]);
        let r = random_profile(1);
        let n = 64;
        let mean: f64 = (0..n).map(|j| r.quasimomentum(2.0 * PI / r.omega1 * j as f64 / n as f64)[0]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-13);
    }

    #[test]
    fn unshaken_table_and_coefficients() {
        let t = tunneling_coefficients(&ShakingProfile::unshaken(3.0), &LatticeGeometry::honeycomb(), 8).unwrap();
        for k in 0..3 {
            assert!((t.get(k, 0) - 1.0).norm() < 1e-15);
            assert!((1..=8).all(|m| t.get(k, m).norm() < 1e-15 && t.get(k, -m).norm() < 1e-15));
        }
        let c = coefficient_set(&t, 0.4, 3.0, 4).unwrap();
        for k in 0..3 {
            assert!((c.d[k] - 1.0).norm() < 1e-15);
            assert!(c.d_tilde[k].norm() < 1e-15 && c.e[k].norm() < 1e-15 && c.e_tilde[k].norm() < 1e-15);
        }
        assert!(c.c_delta.norm() < 1e-15 && c.c_delta_tilde.norm() < 1e-15);
        let p = effective_params(&c, &Quench { j0: 0.3, gamma: 0.0 }, 1.0);
        assert!((p.delta - 0.4).abs() < 1e-15);
        assert!(p.j.iter().all(|j| (j - 0.3).norm() < 1e-15));
        assert_eq!(chern_number(&p, 1e-9).unwrap(), 0);
    }

    #[test]
    fn single_tone_gives_bessel_values() {
        // a_1 = e_y sees only the y component, q sin(w t - delta').
        let dp = 0.9;
        let q = 1.3;
        let p = ShakingProfile::new(1.0, vec![q], vec![0.2], vec![dp]).unwrap();
        let t = tunneling_coefficients(&p, &LatticeGeometry::honeycomb(), 10).unwrap();
        for m in -10..=10 {
            let expect = Complex64::from_polar(bessel(m, q), -(m as f64) * dp);
            assert!((t.get(0, m) - expect).norm() < 1e-13, "m = {m}");
        }
    }

    #[test]
    fn parseval_and_v_pairing() {
        for seed in 0..5 {
            let t = tunneling_coefficients(&random_profile(seed), &LatticeGeometry::honeycomb(), 30).unwrap();
            assert!(t.tail_mass(30).abs() < 1e-10);
            for (n, m) in [(1, 0), (2, -1), (-3, 2), (1, 1)] {
                assert!((v_sum(&t, n, m) + v_sum(&t, -n, -m).conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn coefficients_converge_in_cutoff() {
        let g = LatticeGeometry::honeycomb();
        for seed in [7, 8] {
            let p = random_profile(seed);
            let a = converged_coefficients(&p, &g, 0.5, 12).unwrap();
            let n = 2 * a.n_cut;
            let b = coefficient_set(&tunneling_coefficients(&p, &g, 2 * n).unwrap(), 0.5, p.omega1, n).unwrap();
            assert!(a.max_difference(&b) < 1e-10);
        }
    }

    #[test]
    fn onsite_energy_is_real() {
        for seed in 0..5 {
            let p = random_profile(seed);
            let c = converged_coefficients(&p, &LatticeGeometry::honeycomb(), 0.5, 12).unwrap();
            let q = Quench { j0: 1.0, gamma: 0.3 };
            assert!(onsite_imaginary_part(&c, &q, 0.0).abs() < 1e-12);
            assert!(c.c_delta.im.abs() < 1e-12 && c.c_delta_tilde.im.abs() < 1e-12);
        }
    }

    #[test]
    fn dual_h_forms_agree() {
        for seed in 0..5 {
            let p = random_profile(seed + 10);
            let c = converged_coefficients(&p, &LatticeGeometry::honeycomb(), 0.2, 12).unwrap();
            let q = Quench { j0: 1.5, gamma: 0.4 };
            for t in [0.0, 0.5, 2.0] {
                let (a, b) = effective_params(&c, &q, t).h_pm();
                let (x, y) = h_pm_kappa(&c, &q, t);
                assert!((a - x).abs() < 1e-12 && (b - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chern_sign_algebra() {
        assert_eq!(chern_from_h(1.0, 1.0, 1e-9).unwrap(), 0);
        assert_eq!(chern_from_h(1.0, -1.0, 1e-9).unwrap(), 1);
        assert_eq!(chern_from_h(-1.0, 1.0, 1e-9).unwrap(), -1);
        assert_eq!(chern_from_h(-1.0, -2.0, 1e-9).unwrap(), 0);
        assert!(matches!(chern_from_h(1e-12, 1.0, 1e-9), Err(Error::PhaseBoundary { .. })));
    }

    #[test]
    fn symmetric_seed_needs_no_iteration() {
        // Without on-site offset or quench the nearest coefficients are the
        // zeroth Fourier components, equal for circular shaking at w1 alone.
        let seed = ShakingProfile::new(5.0, vec![1.1, 1e-3, 1e-3], vec![0.0; 3], vec![PI / 2.0, 0.0, 0.0]).unwrap();
        let mut circ = seed.clone();
        circ.q[1] = 0.0;
        circ.q[2] = 0.0;
        let r = fine_tune_residual(&circ, &LatticeGeometry::honeycomb(), 0.0, 0.0, 12).unwrap();
        assert!(r.norm() < 1e-13);
        let out = solve_fine_tune(&circ, &LatticeGeometry::honeycomb(), 0.0, 0.0, &FineTuneOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
    }

    fn tuned() -> (FineTuneResult, f64, f64) {
        let (delta, gamma) = (0.5, 0.2);
        let seed = ShakingProfile::new(10.0, vec![1.2, 0.7, 0.2], vec![0.0, 2.0, 1.0], vec![PI / 2.0, 0.2, 2.5]).unwrap();
        (solve_fine_tune(&seed, &LatticeGeometry::honeycomb(), delta, gamma, &FineTuneOptions::default()).unwrap(), delta, gamma)
    }

    #[test]
    fn fine_tuned_quench_is_isotropic_and_crosses_once() {
        let (r, delta, gamma) = tuned();
        assert!(r.residual < 1e-10);
        let c = &r.coefficients;
        let nn = c.next_nearest(gamma);
        assert!((nn[0] - nn[1]).norm() > 1e-3 || (nn[0] - nn[2]).norm() > 1e-3);
        let (kp, km) = c.kappa(gamma);
        // Start deep enough that one of x, y exceeds 1.
        let j0 = (3.0 * c.omega1 * delta / kp.abs().max(km.abs())).sqrt();
        let q = Quench { j0, gamma };
        let times: Vec<f64> = (0..100).map(|k| 0.2 * k as f64).collect();
        let rows = quench_trajectory(c, &q, &times, default_gap_tol(delta)).unwrap();
        for row in &rows {
            assert!(row.nearest_anisotropy < 1e-9);
            assert!(row.h_mismatch < 1e-10);
            assert!((row.x / row.y - kp / km).abs() < 1e-12 * (kp / km).abs());
        }
        assert_ne!(rows[0].chern, 0);
        assert_eq!(rows.last().unwrap().chern, 0);
        let changes = rows.windows(2).filter(|w| w[0].chern != w[1].chern).count();
        assert_eq!(changes, 1);
        let late = effective_params(c, &q, 200.0);
        assert!((late.delta - delta).abs() < 1e-12);
    }
}
