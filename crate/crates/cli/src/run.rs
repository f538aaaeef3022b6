//! Experiment runners. Each returns its CSV files and a JSON summary; the
//! caller writes them together with the manifest.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use floweng::chern::{
    converged_coefficients, default_gap_tol, phase_diagram, quench_trajectory, solve_fine_tune, CoefficientSet,
    FineTuneOptions, LatticeGeometry, Quench, ShakingProfile,
};
use floweng::flow::{integrate_flow, FlowOptions, SignGenerator};
use floweng::hfe::{effective_hamiltonian, expand, Order};
use floweng::lab::{hamiltonian_at, heating_trace, infidelity_sweep, LabOptions};
use floweng::lambda::{design_drive, quasi_static_rabi, Components, DesignOptions, GaussianTarget};
use floweng::models::{build_fermi_hubbard, build_spin_chain, random_drive, DriveSpec, ModelInstance};
use floweng::random::random_hermitian_series;
use floweng::{Basis, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ChernConfig, Experiment, ModelConfig, ModelName, RunConfig};
use crate::output::{num, Table};

pub struct Artifacts {
    pub files: Vec<(&'static str, String)>,
    pub seeds: Vec<u64>,
    pub discarded_norms: Vec<f64>,
    pub summary: Value,
}

#[derive(Debug)]
pub enum RunError {
    Invalid(String),
    Numerical { error: Error, context: Value },
}

impl RunError {
    fn numerical(context: Value) -> impl FnOnce(Error) -> RunError {
        move |error| match error {
            Error::InvalidArgument(m) | Error::InvalidBasis(m) => RunError::Invalid(m),
            error => RunError::Numerical { error, context },
        }
    }
}

type Outcome = Result<Artifacts, RunError>;

pub fn run(config: &RunConfig) -> Outcome {
    let seed = config.seed.unwrap_or(0);
    match config.experiment {
        Experiment::FlowCheck => flow_check(config, seed),
        Experiment::LambdaDesign => lambda_design(config),
        Experiment::EtaSweep => eta_sweep(config, seed),
        Experiment::Heating => heating(config, seed),
        Experiment::ChernDiagram => chern_diagram(&config.chern),
        Experiment::Quench => quench(&config.chern),
    }
}

fn generic_eta(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let eta: f64 = rng.gen_range(0.1..0.9);
        if !(2..=6).any(|q| (1..q).any(|p| (eta - p as f64 / q as f64).abs() < 0.03)) {
            return eta;
        }
    }
}

fn flow_check(config: &RunConfig, seed: u64) -> Outcome {
    let c = &config.flow_check;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(c.instances);
    for _ in 0..c.instances {
        let eta = c.eta.unwrap_or_else(|| generic_eta(&mut rng));
        let basis = Basis::two(1.0, eta).map_err(RunError::numerical(json!({ "eta": eta })))?;
        instances.push((eta, random_hermitian_series(&mut rng, basis, c.dim, [1, 1], c.gamma)));
    }
    let opts = FlowOptions { rtol: c.rtol, s_max: c.s_max, ..FlowOptions::default() };
    let results: Vec<Result<Vec<(f64, f64, f64)>, RunError>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, (eta, shape))| {
            [c.omega1, 2.0 * c.omega1]
                .iter()
                .map(|&w1| {
                    let ctx = json!({ "instance": i, "eta": eta, "omega1": w1 });
                    let err = || RunError::numerical(ctx.clone());
                    let h = shape
                        .clone()
                        .rebased(Basis::two(w1, eta * w1).map_err(err())?)
                        .and_then(|h| h.with_caps(vec![3, 3]))
                        .map_err(err())?;
                    let flow = integrate_flow(&h, &SignGenerator, &opts).map_err(err())?;
                    let e = expand(&h).map_err(err())?;
                    let total = e.total().map_err(err())?;
                    Ok((w1, flow.effective.distance(&total) / e.order0.norm(), flow.discarded_norm))
                })
                .collect()
        })
        .collect();

    let mut table = Table::new(&["instance", "dim", "eta", "omega1", "relative_error", "discarded_norm"]);
    let mut ratios = Vec::new();
    let mut discarded = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        for &(w1, err, disc) in &r {
            table.row(&[i.to_string(), c.dim.to_string(), num(instances[i].0), num(w1), num(err), num(disc)]);
            discarded.push(disc);
        }
        ratios.push(r[0].1 / r[1].1);
    }
    Ok(Artifacts {
        files: vec![("flow_check.csv", table.into_string())],
        seeds: vec![seed],
        discarded_norms: discarded,
        summary: json!({ "richardson_ratios": ratios }),
    })
}

fn lambda_design(config: &RunConfig) -> Outcome {
    let c = &config.lambda_design;
    let w2 = c.eta * c.omega1;
    let target = GaussianTarget { width_fraction: c.width_fraction, ..GaussianTarget::new(w2, c.amplitude) };
    let opts = DesignOptions { samples: c.samples, max_iterations: c.max_iterations, rel_tol: c.rel_tol };
    let r = design_drive(|t| target.value(t), c.p_max, c.eta, c.omega1, &opts)
        .map_err(RunError::numerical(json!({ "eta": c.eta, "omega1": c.omega1 })))?;
    let mut table = Table::new(&["t", "target", "omega_e", "omega_e_quasistatic", "re_omega", "im_omega"]);
    for (&(t, y), &a) in r.target_samples.iter().zip(&r.achieved_rabi) {
        let omega = r.drive.rabi(t);
        let qs = quasi_static_rabi(&r.drive.omega, c.omega1, w2, t);
        table.row(&[num(t), num(y), num(a), num(qs), num(omega.re), num(omega.im)]);
    }
    let components = |m: &Components| -> Vec<Value> {
        m.iter().map(|(p, z)| json!({ "p": p, "re": z.re, "im": z.im })).collect()
    };
    Ok(Artifacts {
        files: vec![("lambda_design.csv", table.into_string())],
        seeds: Vec::new(),
        discarded_norms: Vec::new(),
        summary: json!({
            "omega": components(&r.drive.omega),
            "gamma": components(&r.drive.gamma),
            "max_deviation": r.max_deviation,
            "normalized_max_deviation": r.normalized_max_deviation,
            "residual_norm": r.residual_norm,
            "symmetry_defect": r.symmetry_defect(),
            "gamma_cancelled": r.gamma_cancelled,
            "converged": r.converged,
            "iterations": r.iterations,
        }),
    })
}

fn build_model(m: &ModelConfig) -> Result<ModelInstance, RunError> {
    let built = match m.kind {
        ModelName::SpinChain => build_spin_chain(m.l),
        ModelName::FermiHubbard => build_fermi_hubbard(m.l, m.n_up, m.n_down),
    };
    built.map_err(|e| match e {
        Error::InvalidArgument(msg) => RunError::Invalid(msg),
        e => RunError::Invalid(e.to_string()),
    })
}

fn drives(model: &ModelInstance, m: &ModelConfig, gamma: f64, seed: u64) -> (Vec<DriveSpec>, Vec<u64>) {
    let seeds: Vec<u64> = (0..model.operators.len() as u64).map(|k| seed.wrapping_add(k)).collect();
    (seeds.iter().map(|&s| random_drive(gamma, m.m1, m.m2, s)).collect(), seeds)
}

fn lab_options(m: &ModelConfig) -> LabOptions {
    LabOptions { omega1: m.omega1, order: Order::One, tol: m.propagation_tol }
}

fn eta_sweep(config: &RunConfig, seed: u64) -> Outcome {
    let c = &config.eta_sweep;
    let model = build_model(&c.model)?;
    let (drives, seeds) = drives(&model, &c.model, c.gammas[0], seed);
    let rows = infidelity_sweep(&model, &drives, &c.eta_grid(), &c.gammas, &lab_options(&c.model));
    let mut table = Table::new(&["eta", "gamma", "infidelity", "discarded_norm", "flags"]);
    for r in &rows {
        table.row(&[num(r.eta), num(r.gamma), num(r.infidelity), num(r.discarded_norm), r.flags.join(";")]);
    }
    let flagged = rows.iter().filter(|r| r.is_flagged()).count();
    let mut finite: Vec<f64> = rows.iter().map(|r| r.infidelity).filter(|x| x.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let median = if finite.is_empty() { f64::NAN } else { finite[finite.len() / 2] };
    Ok(Artifacts {
        files: vec![("sweep.csv", table.into_string())],
        seeds,
        discarded_norms: rows.iter().map(|r| r.discarded_norm).collect(),
        summary: json!({
            "model_dim": model.dim,
            "rows": rows.len(),
            "flagged": flagged,
            "median_infidelity": finite_or_null(median),
        }),
    })
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn heating(config: &RunConfig, seed: u64) -> Outcome {
    let c = &config.heating;
    let model = build_model(&c.model)?;
    let (drives, seeds) = drives(&model, &c.model, c.gamma, seed);
    let opts = lab_options(&c.model);
    let ctx = json!({ "eta": c.eta, "gamma": c.gamma, "model_dim": model.dim });
    let h = hamiltonian_at(&model, &drives, c.eta, opts.omega1).map_err(RunError::numerical(ctx.clone()))?;
    let discarded = effective_hamiltonian(&h, opts.order).map_err(RunError::numerical(ctx.clone()))?.discarded_norm();
    let tr = heating_trace(&model, &drives, c.eta, c.periods, &opts).map_err(RunError::numerical(ctx))?;
    let mut table = Table::new(&["k", "t", "energy_driven", "energy_effective"]);
    let mut worst = 0.0f64;
    for (k, ((t, a), b)) in tr.times.iter().zip(&tr.energy_driven).zip(&tr.energy_effective).enumerate() {
        table.row(&[k.to_string(), num(*t), num(*a), num(*b)]);
        worst = worst.max((a - b).abs() / a.abs());
    }
    Ok(Artifacts {
        files: vec![("heating.csv", table.into_string())],
        seeds,
        discarded_norms: vec![discarded],
        summary: json!({ "model_dim": model.dim, "max_relative_energy_difference": finite_or_null(worst) }),
    })
}

struct Lattice {
    profile: ShakingProfile,
    coefficients: CoefficientSet,
    summary: Value,
}

fn lattice(c: &ChernConfig) -> Result<Lattice, RunError> {
    let geometry = LatticeGeometry::honeycomb();
    let seed = ShakingProfile::new(c.omega1, c.q.clone(), c.delta.clone(), c.delta_prime.clone())
        .map_err(RunError::numerical(Value::Null))?;
    let ctx = json!({ "seed_profile": seed });
    if c.fine_tune {
        let opts = FineTuneOptions { tol: c.fine_tune_tol, n_cut: c.n_cut, ..FineTuneOptions::default() };
        let r = solve_fine_tune(&seed, &geometry, c.onsite, c.quench_rate, &opts).map_err(RunError::numerical(ctx))?;
        let summary = json!({
            "profile": r.profile,
            "fine_tune_residual": r.residual,
            "fine_tune_iterations": r.iterations,
            "n_cut": r.coefficients.n_cut,
        });
        Ok(Lattice { profile: r.profile, coefficients: r.coefficients, summary })
    } else {
        let coefficients =
            converged_coefficients(&seed, &geometry, c.onsite, c.n_cut).map_err(RunError::numerical(ctx))?;
        let summary = json!({ "profile": seed, "n_cut": coefficients.n_cut });
        Ok(Lattice { profile: seed, coefficients, summary })
    }
}

fn chern_diagram(c: &ChernConfig) -> Outcome {
    let lat = lattice(c)?;
    let n = c.grid_points;
    let scale = c.omega1 * c.onsite.abs() * c.coupling_max;
    let j0: Vec<f64> = (1..=n).map(|k| (scale * k as f64 / n as f64).sqrt()).collect();
    let phases: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
    let rows = phase_diagram(&lat.profile, &LatticeGeometry::honeycomb(), c.onsite, c.quench_rate, &j0, &phases, c.n_cut)
        .map_err(RunError::numerical(json!({ "profile": lat.profile })))?;
    let mut table = Table::new(&["x", "y", "chern"]);
    let mut counts = BTreeMap::new();
    for r in &rows {
        table.row(&[num(r.x), num(r.y), r.chern.to_string()]);
        *counts.entry(r.chern.to_string()).or_insert(0usize) += 1;
    }
    let mismatch = rows.iter().map(|r| r.h_mismatch).fold(0.0, f64::max);
    let mut summary = lat.summary;
    summary["chern_counts"] = json!(counts);
    summary["max_h_mismatch"] = json!(mismatch);
    Ok(Artifacts { files: vec![("phase_diagram.csv", table.into_string())], seeds: Vec::new(), discarded_norms: Vec::new(), summary })
}

fn quench(c: &ChernConfig) -> Outcome {
    let lat = lattice(c)?;
    let (kp, km) = lat.coefficients.kappa(c.quench_rate);
    let j0 = c.j0.unwrap_or_else(|| (3.0 * c.omega1 * c.onsite.abs() / kp.abs().max(km.abs())).sqrt());
    let times: Vec<f64> = (0..c.time_points).map(|k| c.time_step * k as f64).collect();
    let q = Quench { j0, gamma: c.quench_rate };
    let rows = quench_trajectory(&lat.coefficients, &q, &times, default_gap_tol(c.onsite))
        .map_err(RunError::numerical(json!({ "profile": lat.profile, "j0": j0 })))?;
    let mut table = Table::new(&["t", "x", "y", "chern"]);
    for r in &rows {
        table.row(&[num(r.t), num(r.x), num(r.y), r.chern.to_string()]);
    }
    let crossings: Vec<Value> = rows
        .windows(2)
        .filter(|w| w[0].chern != w[1].chern)
        .map(|w| json!({ "after": w[0].t, "before": w[1].t, "from": w[0].chern, "to": w[1].chern }))
        .collect();
    let mut summary = lat.summary;
    summary["j0"] = json!(j0);
    summary["max_nearest_anisotropy"] = json!(rows.iter().map(|r| r.nearest_anisotropy).fold(0.0, f64::max));
    summary["max_h_mismatch"] = json!(rows.iter().map(|r| r.h_mismatch).fold(0.0, f64::max));
    summary["chern_changes"] = json!(crossings);
    Ok(Artifacts { files: vec![("trajectory.csv", table.into_string())], seeds: Vec::new(), discarded_norms: Vec::new(), summary })
}
