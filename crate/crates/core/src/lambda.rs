//! The driven three-level Λ system and inverse design of its drive.
//!
//! States are ordered `|1>, |2>, |3>`; `|+> = (|1> + |2>)/sqrt(2)`. The
//! Hamiltonian is
//!
//! ```text
//! H(t) = [Gamma(t) + Omega(t) exp(i w1 t)] |3><+| + h.c.
//! ```
//!
//! with `Gamma(t) = sum_p Gamma_p exp(i p w2 t)` and likewise for `Omega`.
//! As a two-frequency Fourier operator (modes `(m1, m2)`), `Omega_p` sits on
//! mode `(1, p)` and `Gamma_p` on `(0, p)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::{FourierOperator, FrequencyBasis, ModeIndex};
use crate::scalar::CMatrix;

pub type Components = BTreeMap<i32, Complex64>;

const GUARD: f64 = 1e-12;

/// `|3><+|`.
pub fn raise_to_excited() -> CMatrix<f64> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut m = CMatrix::<f64>::zeros(3, 3);
    m[(2, 0)] = s;
    m[(2, 1)] = s;
    m
}

/// `|3><3| - |+><+|`.
pub fn splitting_operator() -> CMatrix<f64> {
    let b = raise_to_excited();
    &b * b.adjoint() - b.adjoint() * &b
}

#[derive(Clone, Debug)]
pub struct LambdaDrive {
    pub omega: Components,
    pub gamma: Components,
    pub omega1: f64,
    pub omega2: f64,
}

impl LambdaDrive {
    pub fn new(omega: Components, gamma: Components, omega1: f64, omega2: f64) -> Result<Self> {
        if !(omega1 > 0.0 && omega2 > 0.0) || !omega1.is_finite() || !omega2.is_finite() {
            return Err(Error::InvalidArgument("Λ drive frequencies must be positive".into()));
        }
        let d = LambdaDrive { omega, gamma, omega1, omega2 };
        check_eta(d.eta(), d.p_max())?;
        Ok(d)
    }

    /// Drive with `Gamma` fixed by [`cancel_order0`].
    pub fn cancelled(omega: Components, omega1: f64, omega2: f64) -> Result<Self> {
        let gamma = cancel_order0(&omega, omega2 / omega1)?;
        LambdaDrive::new(omega, gamma, omega1, omega2)
    }

    pub fn eta(&self) -> f64 {
        self.omega2 / self.omega1
    }

    pub fn p_max(&self) -> i32 {
        self.omega.keys().chain(self.gamma.keys()).map(|p| p.abs()).max().unwrap_or(0)
    }

    pub fn rabi(&self, t: f64) -> Complex64 {
        series(&self.omega, self.omega2, t)
    }

    pub fn resonant(&self, t: f64) -> Complex64 {
        series(&self.gamma, self.omega2, t)
    }

    /// Direct evaluation of `H(t)`.
    pub fn hamiltonian_at(&self, t: f64) -> CMatrix<f64> {
        let c = self.resonant(t) + self.rabi(t) * Complex64::from_polar(1.0, self.omega1 * t);
        let b = raise_to_excited() * c;
        b.adjoint() + b
    }

    pub fn fourier_operator(&self) -> Result<FourierOperator<f64>> {
        let basis = FrequencyBasis::two(self.omega1, self.omega2)?;
        let b = raise_to_excited();
        let bd = b.adjoint();
        let mut terms: Vec<(ModeIndex, CMatrix<f64>)> = Vec::new();
        for (&p, &g) in &self.gamma {
            terms.push(([0, p].into(), &b * g));
            terms.push(([0, -p].into(), &bd * g.conj()));
        }
        for (&p, &w) in &self.omega {
            terms.push(([1, p].into(), &b * w));
            terms.push(([-1, -p].into(), &bd * w.conj()));
        }
        let mut op = FourierOperator::from_terms(basis, 3, terms)?;
        op.compact();
        Ok(op)
    }
}

fn series(c: &Components, w: f64, t: f64) -> Complex64 {
    c.iter().map(|(&p, &v)| v * Complex64::from_polar(1.0, p as f64 * w * t)).sum()
}

fn check_eta(eta: f64, p_max: i32) -> Result<()> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::InvalidArgument(format!("η = {eta} must be finite and non-negative")));
    }
    for q in 1..=(2 * p_max) {
        let d = 1.0 - (q as f64 * eta).powi(2);
        if d.abs() < GUARD {
            return Err(Error::Resonance { context: "Λ drive", mode: vec![q], value: d });
        }
    }
    Ok(())
}

fn denominator(p: i32, eta: f64) -> Result<f64> {
    let d = 1.0 + p as f64 * eta;
    if d.abs() < GUARD {
        return Err(Error::Resonance { context: "Λ order 0", mode: vec![p], value: d });
    }
    Ok(d)
}

/// Coefficients of `exp(i p w2 t) |3><+|` in the lowest-order effective
/// Hamiltonian.
pub fn lambda_order0(drive: &LambdaDrive) -> Result<Components> {
    let eta = drive.eta();
    let mut out = Components::new();
    for p in -drive.p_max()..=drive.p_max() {
        let w = drive.omega.get(&p).copied().unwrap_or_default();
        let g = drive.gamma.get(&p).copied().unwrap_or_default();
        let pe = p as f64 * eta;
        out.insert(p, w * (pe / denominator(p, eta)?) + g);
    }
    Ok(out)
}

/// Resonant components that make the lowest order vanish.
pub fn cancel_order0(omega: &Components, eta: f64) -> Result<Components> {
    omega
        .iter()
        .map(|(&p, &w)| {
            let pe = p as f64 * eta;
            Ok((p, -w * (pe / denominator(p, eta)?)))
        })
        .collect()
}

/// `W_pq`, the weight of `Omega_p Omega*_{p-q} exp(i q w2 t) / w1` in the
/// effective Rabi frequency.
pub fn rabi_weight(p: i32, q: i32, eta: f64) -> Result<f64> {
    let (pf, qf) = (p as f64, q as f64);
    let dens = [1.0 - qf * qf * eta * eta, 1.0 + pf * eta, 1.0 + (pf - qf) * eta];
    for d in dens {
        if d.abs() < GUARD {
            return Err(Error::Resonance { context: "effective Rabi frequency", mode: vec![p, q], value: d });
        }
    }
    Ok((1.0 + (2.0 * pf - qf) * eta) / (dens[0] * dens[1] * dens[2]))
}

/// Fourier coefficients `c_q` of the effective Rabi frequency
/// `Omega_e(t) = sum_q c_q exp(i q w2 t)`.
pub fn effective_rabi_coefficients(omega: &Components, eta: f64, omega1: f64) -> Result<BTreeMap<i32, Complex64>> {
    let mut out: BTreeMap<i32, Complex64> = BTreeMap::new();
    for (&p, &wp) in omega {
        for (&k, &wk) in omega {
            let q = p - k;
            let c = wp * wk.conj() * (rabi_weight(p, q, eta)? / omega1);
            *out.entry(q).or_default() += c;
        }
    }
    Ok(out)
}

/// Complex value of the effective Rabi sum; the imaginary part is rounding.
pub fn effective_rabi_complex(omega: &Components, eta: f64, omega1: f64, t: f64) -> Result<Complex64> {
    let c = effective_rabi_coefficients(omega, eta, omega1)?;
    Ok(series(&c, eta * omega1, t))
}

/// Effective Rabi frequency multiplying `|3><3| - |+><+|`.
pub fn effective_rabi(omega: &Components, eta: f64, omega1: f64, t: f64) -> Result<f64> {
    Ok(effective_rabi_complex(omega, eta, omega1, t)?.re)
}

/// `|Omega(t)|^2 / w1`.
pub fn quasi_static_rabi(omega: &Components, omega1: f64, omega2: f64, t: f64) -> f64 {
    series(omega, omega2, t).norm_sqr() / omega1
}

/// Periodic Gaussian target with peak `amplitude` at the middle of the slow
/// period `2 pi / w2` and standard deviation `width_fraction` of that period.
#[derive(Clone, Copy, Debug)]
pub struct GaussianTarget {
    pub omega2: f64,
    pub amplitude: f64,
    pub width_fraction: f64,
}

impl GaussianTarget {
    pub fn new(omega2: f64, amplitude: f64) -> Self {
        GaussianTarget { omega2, amplitude, width_fraction: 0.125 }
    }

    pub fn value(&self, t: f64) -> f64 {
        let period = 2.0 * PI / self.omega2;
        let sigma = self.width_fraction * period;
        let d = t.rem_euclid(period) - 0.5 * period;
        self.amplitude * (-(d * d) / (2.0 * sigma * sigma)).exp()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DesignOptions {
    pub samples: usize,
    pub max_iterations: usize,
    /// Stop once a step lowers the cost by less than this relative amount.
    pub rel_tol: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions { samples: 256, max_iterations: 500, rel_tol: 1e-14 }
    }
}

#[derive(Clone, Debug)]
pub struct DesignResult {
    pub drive: LambdaDrive,
    pub target_samples: Vec<(f64, f64)>,
    pub achieved_rabi: Vec<f64>,
    pub max_deviation: f64,
    /// `max_deviation / max |target|`.
    pub normalized_max_deviation: f64,
    pub residual_norm: f64,
    pub gamma_cancelled: bool,
    pub converged: bool,
    pub iterations: usize,
}

impl DesignResult {
    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.drive, self.target_samples.len())
    }
}

/// Relative RMS of `Omega(t_mid + tau) - conj(Omega(t_mid - tau))` over one
/// slow period, `t_mid = pi / w2`. Zero for a profile whose real part is
/// mirror symmetric and imaginary part antisymmetric about `t_mid`.
pub fn symmetry_defect(drive: &LambdaDrive, samples: usize) -> f64 {
    let period = 2.0 * PI / drive.omega2;
    let mid = 0.5 * period;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..samples {
        let tau = period * j as f64 / samples as f64;
        num += (drive.rabi(mid + tau) - drive.rabi(mid - tau).conj()).norm_sqr();
        den += drive.rabi(tau).norm_sqr();
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Parameter vector: `Re Omega_0`, then `Re, Im` of `Omega_p` for `p != 0`.
fn unpack(x: &DVector<f64>, p_max: i32) -> Components {
    let mut out = Components::new();
    out.insert(0, Complex64::new(x[0], 0.0));
    let mut i = 1;
    for p in (-p_max..=p_max).filter(|&p| p != 0) {
        out.insert(p, Complex64::new(x[i], x[i + 1]));
        i += 2;
    }
    out
}

fn pack(c: &Components, p_max: i32) -> DVector<f64> {
    // Rotate so that Omega_0 is real and non-negative.
    let w0 = c.get(&0).copied().unwrap_or_default();
    let phase = if w0.norm() > 0.0 { w0.conj() / w0.norm() } else { Complex64::new(1.0, 0.0) };
    let mut x = DVector::zeros(4 * p_max as usize + 1);
    x[0] = w0.norm();
    let mut i = 1;
    for p in (-p_max..=p_max).filter(|&p| p != 0) {
        let v = c.get(&p).copied().unwrap_or_default() * phase;
        x[i] = v.re;
        x[i + 1] = v.im;
        i += 2;
    }
    x
}

/// Sampled Hermitian kernels `A(t)` with `Omega_e(t) = v^dag A(t) v`,
/// `v = (Omega_{-P}, ..., Omega_P)`.
fn kernels(p_max: i32, eta: f64, omega1: f64, times: &[f64], omega2: f64) -> Result<Vec<DMatrix<Complex64>>> {
    let n = (2 * p_max + 1) as usize;
    let mut w = DMatrix::<f64>::zeros(n, n);
    for k in -p_max..=p_max {
        for p in -p_max..=p_max {
            w[((k + p_max) as usize, (p + p_max) as usize)] = rabi_weight(p, p - k, eta)? / omega1;
        }
    }
    Ok(times
        .iter()
        .map(|&t| {
            DMatrix::from_fn(n, n, |r, c| {
                let (k, p) = (r as i32 - p_max, c as i32 - p_max);
                Complex64::from_polar(w[(r, c)], (p - k) as f64 * omega2 * t)
            })
        })
        .collect())
}

struct Fit<'a> {
    kernels: &'a [DMatrix<Complex64>],
    target: &'a [f64],
    p_max: i32,
}

impl Fit<'_> {
    fn vector(&self, x: &DVector<f64>) -> DVector<Complex64> {
        let c = unpack(x, self.p_max);
        DVector::from_iterator(c.len(), c.values().copied())
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let v = self.vector(x);
        DVector::from_iterator(
            self.target.len(),
            self.kernels.iter().zip(self.target).map(|(a, &y)| (v.adjoint() * a * &v)[(0, 0)].re - y),
        )
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let v = self.vector(x);
        let p0 = self.p_max as usize;
        let mut j = DMatrix::zeros(self.target.len(), x.len());
        for (row, a) in self.kernels.iter().enumerate() {
            let av = a * &v;
            j[(row, 0)] = 2.0 * av[p0].re;
            let mut i = 1;
            for idx in (0..v.len()).filter(|&k| k != p0) {
                j[(row, i)] = 2.0 * av[idx].re;
                j[(row, i + 1)] = 2.0 * av[idx].im;
                i += 2;
            }
        }
        j
    }
}

/// Least-squares fit of `2 p_max + 1` Rabi components whose effective Rabi
/// frequency follows `target` over one slow period; `Gamma` is then fixed by
/// cancellation. Levenberg-Marquardt damped Gauss-Newton, started from the
/// Fourier projection of `sqrt(w1 * target)`.
pub fn design_drive<F>(target: F, p_max: i32, eta: f64, omega1: f64, opts: &DesignOptions) -> Result<DesignResult>
where
    F: Fn(f64) -> f64,
{
    if p_max < 0 || opts.samples < (4 * p_max as usize + 2) {
        return Err(Error::InvalidArgument("need p_max >= 0 and more samples than unknowns".into()));
    }
    if !(omega1 > 0.0 && eta > 0.0) {
        return Err(Error::InvalidArgument("design needs w1 > 0 and η > 0".into()));
    }
    check_eta(eta, p_max)?;
    let omega2 = eta * omega1;
    let period = 2.0 * PI / omega2;
    let times: Vec<f64> = (0..opts.samples).map(|j| period * j as f64 / opts.samples as f64).collect();
    let ys: Vec<f64> = times.iter().map(|&t| target(t)).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidArgument("target must be finite".into()));
    }

    let mut start = Components::new();
    for p in -p_max..=p_max {
        let c: Complex64 = times
            .iter()
            .zip(&ys)
            .map(|(&t, &y)| Complex64::from_polar((omega1 * y.max(0.0)).sqrt(), -(p as f64) * omega2 * t))
            .sum::<Complex64>()
            / opts.samples as f64;
        start.insert(p, c);
    }

    let ks = kernels(p_max, eta, omega1, &times, omega2)?;
    let fit = Fit { kernels: &ks, target: &ys, p_max };
    let mut x = pack(&start, p_max);
    let mut r = fit.residual(&x);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = cost == 0.0;
    let mut iterations = 0;
    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let j = fit.jacobian(&x);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = &x + &step;
            if trial[0] < 0.0 {
                trial = -trial;
            }
            let rt = fit.residual(&trial);
            let ct = rt.norm_squared();
            if ct < cost {
                let gain = (cost - ct) / cost;
                x = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if gain < opts.rel_tol || cost < 1e-30 {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No descent direction left at working precision.
            converged = g.norm() <= 1e-10 * (1.0 + cost.sqrt()) * j.norm();
            break;
        }
    }

    let omega = unpack(&x, p_max);
    let drive = LambdaDrive::cancelled(omega, omega1, omega2)?;
    let achieved: Vec<f64> = r.iter().zip(&ys).map(|(d, y)| d + y).collect();
    let max_deviation = r.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let peak = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    Ok(DesignResult {
        drive,
        target_samples: times.into_iter().zip(ys).collect(),
        achieved_rabi: achieved,
        max_deviation,
        normalized_max_deviation: if peak > 0.0 { max_deviation / peak } else { max_deviation },
        residual_norm: cost.sqrt(),
        gamma_cancelled: true,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfe;
    use crate::propagator::{gate_fidelity, propagate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_components(p_max: i32, amp: f64, seed: u64) -> Components {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (-p_max..=p_max)
            .map(|p| (p, Complex64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp))))
            .collect()
    }

    #[test]
    fn order0_examples() {
        let omega: Components = [(1, Complex64::new(1.0, 0.0))].into();
        let eta = 1.0 / 7f64.sqrt();
        let d = LambdaDrive::new(omega.clone(), Components::new(), 1.0, eta).unwrap();
        let c = lambda_order0(&d).unwrap();
        assert!((c[&1] - Complex64::new(eta / (1.0 + eta), 0.0)).norm() < 1e-15);
        let g = cancel_order0(&omega, 0.5).unwrap();
        assert!((g[&1] + Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        let g0 = cancel_order0(&[(0, Complex64::new(2.0, 1.0))].into(), 0.3).unwrap();
        assert_eq!(g0[&0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cancellation_round_trip() {
        for seed in 0..10 {
            let omega = random_components(3, 1.0, seed);
            let d = LambdaDrive::cancelled(omega, 10.0, 10.0 / 7f64.sqrt()).unwrap();
            assert!(lambda_order0(&d).unwrap().values().all(|c| c.norm() < 1e-15));
        }
    }

    #[test]
    fn operator_matches_direct_evaluation() {
        let d = LambdaDrive::new(random_components(1, 1.0, 3), random_components(1, 0.5, 4), 5.0, 1.3).unwrap();
        let op = d.fourier_operator().unwrap();
        for k in 0..20 {
            let t = 0.173 * k as f64;
            let diff = op.evaluate_at(t) - d.hamiltonian_at(t);
            assert!(diff.norm() < 1e-13);
        }
    }

    #[test]
    fn order0_matches_expansion() {
        let d = LambdaDrive::new(random_components(3, 1.0, 5), random_components(3, 1.0, 6), 10.0, 10.0 / (5.0 * 3f64.sqrt()))
            .unwrap();
        let e0 = hfe::effective_order0(&d.fourier_operator().unwrap()).unwrap();
        let c = lambda_order0(&d).unwrap();
        let b = raise_to_excited();
        for p in -3..=3 {
            let expect = &b * c[&p] + b.adjoint() * c[&-p].conj();
            assert!((e0.term_or_zero(&[0, p].into()) - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn order1_is_effective_rabi_after_cancellation() {
        let w1 = 10.0;
        let eta = 1.0 / 7f64.sqrt();
        let omega = random_components(3, 1.0, 9);
        let d = LambdaDrive::cancelled(omega.clone(), w1, eta * w1).unwrap();
        let e1 = hfe::effective_order1(&d.fourier_operator().unwrap()).unwrap();
        let c = effective_rabi_coefficients(&omega, eta, w1).unwrap();
        let s = splitting_operator();
        for (m, term) in e1.terms() {
            let q = m.components()[1];
            let expect = &s * c.get(&q).copied().unwrap_or_default();
            assert!((term - expect).norm() < 1e-12, "mode {m:?}");
        }
        for q in c.keys() {
            assert!(e1.term(&[0, *q].into()).is_some() || c[q].norm() < 1e-14);
        }
    }

    #[test]
    fn effective_rabi_is_real() {
        for seed in 0..20 {
            let omega = random_components(3, 1.0, seed);
            for k in 0..16 {
                let z = effective_rabi_complex(&omega, 0.23, 3.0, 0.37 * k as f64).unwrap();
                assert!(z.im.abs() <= 1e-12 * z.re.abs().max(1e-300) + 1e-15, "{z}");
            }
        }
    }

    #[test]
    fn quasi_static_limit() {
        let omega = random_components(3, 1.0, 2);
        let w1 = 4.0;
        let t = 0.9;
        let eta0 = effective_rabi(&omega, 0.0, w1, t).unwrap();
        assert!((eta0 - quasi_static_rabi(&omega, w1, 0.0, t)).abs() < 1e-13);
        let single: Components = [(0, Complex64::new(0.6, -0.8))].into();
        for eta in [0.0, 0.1, 0.4] {
            assert!((effective_rabi(&single, eta, 2.0, 1.1).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn resonant_eta_is_rejected() {
        let omega = random_components(3, 1.0, 1);
        assert!(matches!(effective_rabi(&omega, 0.25, 1.0, 0.0), Err(Error::Resonance { .. })));
        assert!(LambdaDrive::new(omega, Components::new(), 1.0, 1.0 / 6.0).is_err());
        assert!(cancel_order0(&[(-2, Complex64::new(1.0, 0.0))].into(), 0.5).is_err());
    }

    #[test]
    fn constant_target_is_solved_exactly() {
        let w1 = 20.0;
        let r = design_drive(|_| 0.3, 3, 1.0 / 7f64.sqrt(), w1, &DesignOptions::default()).unwrap();
        assert!(r.residual_norm < 1e-10);
        assert!((r.drive.omega[&0].re - (0.3 * w1).sqrt()).abs() < 1e-10);
        assert!(r.converged);
    }

    #[test]
    fn gaussian_design_tracks_target() {
        let w1 = 100.0;
        let eta = 1.0 / (5.0 * 3f64.sqrt());
        let g = GaussianTarget::new(eta * w1, 1.0);
        let r = design_drive(|t| g.value(t), 3, eta, w1, &DesignOptions::default()).unwrap();
        assert!(r.normalized_max_deviation < 0.05, "{}", r.normalized_max_deviation);
        for (&(t, _), &a) in r.target_samples.iter().zip(&r.achieved_rabi).step_by(17) {
            let direct = effective_rabi(&r.drive.omega, eta, w1, t).unwrap();
            assert!((direct - a).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_target_shape() {
        let g = GaussianTarget::new(2.0, 3.0);
        let period = PI;
        assert!((g.value(0.5 * period) - 3.0).abs() < 1e-15);
        assert!((g.value(0.3) - g.value(period - 0.3)).abs() < 1e-14);
        assert!((g.value(0.3) - g.value(0.3 + period)).abs() < 1e-12);
        assert!((g.value(0.0) - 3.0 * (-8.0f64).exp()).abs() < 1e-15);
    }

    fn one_period_infidelity(w1: f64) -> f64 {
        let eta = 1.0 / (5.0 * 3f64.sqrt());
        let omega: Components = [(-1, Complex64::new(0.3, 0.2)), (0, Complex64::new(1.0, 0.0)), (1, Complex64::new(0.4, -0.1))]
            .into();
        let d = LambdaDrive::cancelled(omega.clone(), w1, eta * w1).unwrap();
        let s = splitting_operator();
        let c = effective_rabi_coefficients(&omega, eta, w1).unwrap();
        let he = |t: f64| &s * series(&c, eta * w1, t);
        let t1 = 4.0 * PI / w1;
        let u = propagate(&|t| d.hamiltonian_at(t), 0.0, t1, 1e-13).unwrap().u;
        let ue = propagate(&he, 0.0, t1, 1e-13).unwrap().u;
        1.0 - gate_fidelity(&u, &ue).unwrap()
    }

    #[test]
    fn dynamics_follow_effective_hamiltonian() {
        let a = one_period_infidelity(20.0);
        let b = one_period_infidelity(40.0);
        assert!(a > 0.0 && a < 1e-3, "{a}");
        assert!(a / b > 4.0, "{a} {b}");
    }
}
