use std::f64::consts::PI;

use floweng::chern::{
    converged_coefficients, effective_params, h_pm_kappa, onsite_imaginary_part, LatticeGeometry, Quench,
    ShakingProfile,
};
use floweng::hfe::{effective_order0, effective_order1};
use floweng::lab::{heating_trace, period_infidelity, LabOptions};
use floweng::lambda::{
    effective_rabi, effective_rabi_complex, rabi_weight, splitting_operator, Components, LambdaDrive,
};
use floweng::models::{build_spin_chain, random_drive};
use num_complex::Complex64;
use proptest::prelude::*;

fn components(values: &[(f64, f64)]) -> Components {
    let p_max = (values.len() / 2) as i32;
    values.iter().enumerate().map(|(i, &(re, im))| (i as i32 - p_max, Complex64::new(re, im))).collect()
}

fn irrational_eta() -> impl Strategy<Value = f64> {
    (0.05f64..0.9).prop_filter("away from resonances up to q = 6", |eta| {
        (1..=6).all(|q| (1.0 - q as f64 * eta).abs() > 0.02)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn effective_rabi_weights_are_symmetric(p in -3i32..=3, k in -3i32..=3, eta in irrational_eta()) {
        let a = rabi_weight(p, p - k, eta).unwrap();
        let b = rabi_weight(k, k - p, eta).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn cancelled_lambda_drive_has_real_effective_rabi(
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7),
        eta in irrational_eta(),
        t in 0.0f64..10.0,
    ) {
        let w1 = 25.0;
        let omega = components(&values);
        let d = LambdaDrive::cancelled(omega.clone(), w1, eta * w1).unwrap();
        let op = d.fourier_operator().unwrap();
        prop_assert!(effective_order0(&op).unwrap().norm() < 1e-12);
        let direct = effective_order1(&op).unwrap().evaluate_at(t);
        let rabi = effective_rabi(&omega, eta, w1, t).unwrap();
        prop_assert!((direct - splitting_operator() * Complex64::new(rabi, 0.0)).norm() < 1e-11);
        prop_assert!(effective_rabi_complex(&omega, eta, w1, t).unwrap().im.abs() < 1e-12);
    }

    #[test]
    fn dual_h_formulas_agree(
        q in prop::collection::vec(0.0f64..1.2, 2),
        phases in prop::collection::vec(0.0f64..(2.0 * PI), 4),
        j0 in 0.2f64..3.0,
        t in 0.0f64..5.0,
    ) {
        let profile = ShakingProfile::new(8.0, q, phases[..2].to_vec(), phases[2..].to_vec()).unwrap();
        let c = converged_coefficients(&profile, &LatticeGeometry::honeycomb(), 0.4, 8).unwrap();
        let quench = Quench { j0, gamma: 0.3 };
        let (hp, hm) = effective_params(&c, &quench, t).h_pm();
        let (kp, km) = h_pm_kappa(&c, &quench, t);
        let scale = hp.abs().max(hm.abs()).max(0.4);
        prop_assert!((hp - kp).abs() < 1e-10 * scale && (hm - km).abs() < 1e-10 * scale);
        prop_assert!(onsite_imaginary_part(&c, &quench, t).abs() < 1e-10 * scale);
    }
}

#[test]
fn unshaken_lattice_is_the_bare_model() {
    let c = converged_coefficients(&ShakingProfile::unshaken(5.0), &LatticeGeometry::honeycomb(), 0.7, 4).unwrap();
    let p = effective_params(&c, &Quench { j0: 1.3, gamma: 0.5 }, 0.8);
    assert!((p.delta - 0.7).abs() < 1e-14);
    let j = 1.3 * (-0.5f64 * 0.8).exp();
    for k in 0..3 {
        assert!((p.j[k] - Complex64::new(j, 0.0)).norm() < 1e-14);
        assert!(p.g[k].norm() < 1e-14);
    }
}

#[test]
fn weak_drive_heating_matches_effective_dynamics() {
    let model = build_spin_chain(4).unwrap();
    let drives: Vec<_> = (0..3).map(|k| random_drive(0.01, 3, 1, 20 + k)).collect();
    let eta = (5f64.sqrt() - 1.0) / 2.0;
    let tr = heating_trace(&model, &drives, eta, 4, &LabOptions::default()).unwrap();
    let scale = tr.energy_driven.iter().map(|e| e.abs()).fold(0.0, f64::max);
    for (a, b) in tr.energy_driven.iter().zip(&tr.energy_effective) {
        assert!((a - b).abs() < 5e-3 * scale, "{a} vs {b}");
    }
    let (inf, _) = period_infidelity(&model, &drives, eta, &LabOptions::default()).unwrap();
    assert!(inf < 1e-5, "{inf}");
}
