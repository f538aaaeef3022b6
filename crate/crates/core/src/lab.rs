//! Validation experiments: one-period gate infidelity sweeps and
//! stroboscopic energy traces.
//!
//! All drives scale as `gamma * w1`, so with `t' = w1 t` the dimensionless
//! problem depends on `gamma` and `eta = w2 / w1` only; `w1` sets units.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hfe::{effective_hamiltonian, Order};
use crate::models::{assemble_fourier_hamiltonian, assemble_single_frequency, DriveSpec, ModelInstance};
use crate::modes::{FourierOperator, FrequencyBasis};
use crate::propagator::{gate_fidelity, propagate};
use crate::scalar::CMatrix;

#[derive(Clone, Debug)]
pub struct LabOptions {
    pub omega1: f64,
    pub order: Order,
    /// Step-doubling tolerance of every propagation.
    pub tol: f64,
}

impl Default for LabOptions {
    fn default() -> Self {
        LabOptions {
            omega1: 1.0,
            order: Order::One,
            tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub gamma: f64,
    /// `1 - F`, or NaN when the point is flagged.
    pub infidelity: f64,
    pub discarded_norm: f64,
    pub flags: Vec<String>,
}

impl SweepRow {
    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// Fourier Hamiltonian at `eta`; `eta = 0` gives the single-frequency limit.
pub fn hamiltonian_at(model: &ModelInstance, drives: &[DriveSpec], eta: f64, omega1: f64) -> Result<FourierOperator<f64>> {
    if eta == 0.0 {
        assemble_single_frequency(model, drives, omega1)
    } else {
        assemble_fourier_hamiltonian(model, drives, &FrequencyBasis::two(omega1, eta * omega1)?)
    }
}

fn rescaled(drives: &[DriveSpec], gamma: f64) -> Vec<DriveSpec> {
    drives.iter().map(|d| d.with_gamma(gamma)).collect()
}

/// Exact and effective one-period propagators; returns `(1 - F, discarded)`.
pub fn period_infidelity(model: &ModelInstance, drives: &[DriveSpec], eta: f64, opts: &LabOptions) -> Result<(f64, f64)> {
    let h = hamiltonian_at(model, drives, eta, opts.omega1)?;
    let he = effective_hamiltonian(&h, opts.order)?;
    let period = 2.0 * std::f64::consts::PI / opts.omega1;
    let u0 = propagate(&|t| h.evaluate_at(t), 0.0, period, opts.tol)?;
    let ue = propagate(&|t| he.evaluate_at(t), 0.0, period, opts.tol)?;
    Ok((1.0 - gate_fidelity(&u0.u, &ue.u)?, he.discarded_norm()))
}

fn flag_for(e: &Error) -> &'static str {
    match e {
        Error::Resonance { .. } => "resonance",
        Error::PropagationTolerance { .. } => "propagation",
        Error::TruncationDiscard { .. } => "truncation",
        _ => "error",
    }
}

/// Rows ordered by `(eta, gamma)` as given. Numerical failures become
/// flagged rows.
pub fn infidelity_sweep(
    model: &ModelInstance,
    drives: &[DriveSpec],
    etas: &[f64],
    gammas: &[f64],
    opts: &LabOptions,
) -> Vec<SweepRow> {
    let points: Vec<(f64, f64)> = etas.iter().flat_map(|&e| gammas.iter().map(move |&g| (e, g))).collect();
    points
        .par_iter()
        .map(|&(eta, gamma)| match period_infidelity(model, &rescaled(drives, gamma), eta, opts) {
            Ok((infidelity, discarded_norm)) => SweepRow {
                eta,
                gamma,
                infidelity,
                discarded_norm,
                flags: Vec::new(),
            },
            Err(e) => SweepRow {
                eta,
                gamma,
                infidelity: f64::NAN,
                discarded_norm: 0.0,
                flags: vec![flag_for(&e).to_string()],
            },
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatingTrace {
    pub times: Vec<f64>,
    pub energy_driven: Vec<f64>,
    pub energy_effective: Vec<f64>,
}

/// Lowest eigenpair of a hermitian matrix.
pub fn ground_state(h: &CMatrix<f64>) -> (f64, DVector<Complex64>) {
    let eig = h.clone().symmetric_eigen();
    let (i, e) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite spectrum"))
        .expect("nonempty matrix");
    (*e, eig.eigenvectors.column(i).into_owned())
}

fn expectation(h: &CMatrix<f64>, psi: &DVector<Complex64>) -> f64 {
    psi.dotc(&(h * psi)).re
}

/// Stroboscopic energies `<psi(t_k)|H(t_k)|psi(t_k)>` under the driven and
/// the effective evolution, for `k = 0..=k_max`. Both start in the ground
/// state of `H(0)`, which does not depend on `eta` since every phase is 1
/// at `t = 0`.
pub fn heating_trace(
    model: &ModelInstance,
    drives: &[DriveSpec],
    eta: f64,
    k_max: usize,
    opts: &LabOptions,
) -> Result<HeatingTrace> {
    if k_max < 1 {
        return Err(Error::InvalidArgument("heating trace needs at least one period".into()));
    }
    let h = hamiltonian_at(model, drives, eta, opts.omega1)?;
    let he = effective_hamiltonian(&h, opts.order)?;
    let period = 2.0 * std::f64::consts::PI / opts.omega1;
    let (_, psi0) = ground_state(&h.evaluate_at(0.0));
    let mut psi = psi0.clone();
    let mut psi_e = psi0;
    let mut trace = HeatingTrace {
        times: Vec::with_capacity(k_max + 1),
        energy_driven: Vec::with_capacity(k_max + 1),
        energy_effective: Vec::with_capacity(k_max + 1),
    };
    for k in 0..=k_max {
        let t = k as f64 * period;
        let hk = h.evaluate_at(t);
        trace.times.push(t);
        trace.energy_driven.push(expectation(&hk, &psi));
        trace.energy_effective.push(expectation(&hk, &psi_e));
        if k == k_max {
            break;
        }
        let u = propagate(&|s| h.evaluate_at(s), t, t + period, opts.tol)?;
        let ue = propagate(&|s| he.evaluate_at(s), t, t + period, opts.tol)?;
        psi = &u.u * psi;
        psi_e = &ue.u * psi_e;
    }
    Ok(trace)
}
