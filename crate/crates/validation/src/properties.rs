use std::f64::consts::PI;

use floweng::chern::{tunneling_coefficients, LatticeGeometry, ShakingProfile};
use floweng::flow::{generator, rhs_flow, SignGenerator};
use floweng::linalg::{commutator, frobenius, unitarity_defect};
use floweng::propagator::propagate;
use floweng::random::random_hermitian_series;
use floweng::{Basis, Operator};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestRunner;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn series(seed: u64, w1: f64, eta: f64, dim: usize, width: [i32; 2]) -> Operator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_hermitian_series(&mut rng, Basis::two(w1, eta * w1).unwrap(), dim, width, 1.0)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() }
}

fn run<S, F>(strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    TestRunner::new(config()).run(&strategy, test).map_err(|e| e.to_string())
}

pub fn hermiticity_closure() -> Result<(), String> {
    let s = (any::<u64>(), 2usize..=5, 5.0f64..50.0, 0.05f64..0.95, -2.0f64..2.0, -2.0f64..2.0);
    run(s, |(seed, dim, w1, eta, a, b)| {
        let x = series(seed, w1, eta, dim, [2, 2]);
        let y = series(seed ^ 0x5555, w1, eta, dim, [1, 2]);
        let scale = x.norm() * y.norm() + 1.0;
        let ic = x.commutator(&y).unwrap().scaled(Complex64::new(0.0, 1.0));
        prop_assert!(ic.hermitian_defect() < 1e-12 * scale);
        let lin = Operator::linear_combine(&[Complex64::new(a, 0.0), Complex64::new(b, 0.0)], &[&x, &y]).unwrap();
        prop_assert!(lin.hermitian_defect() < 1e-12 * scale);
        let g = generator(&x, &SignGenerator);
        prop_assume!(g.is_ok());
        prop_assert!(g.unwrap().hermitian_defect() < 1e-12 * scale);
        let rhs = rhs_flow(&x, &SignGenerator).unwrap();
        prop_assert!(rhs.hermitian_defect() < 1e-12 * scale);
        Ok(())
    })
}

pub fn unitarity() -> Result<(), String> {
    run((any::<u64>(), 2usize..=4, 0.05f64..0.95, 0.1f64..1.0), |(seed, dim, eta, fraction)| {
        let h = series(seed, 4.0, eta, dim, [1, 1]);
        let t1 = fraction * 2.0 * PI / 4.0;
        let r = propagate(&|t| h.evaluate_at(t), 0.0, t1, 1e-9).unwrap();
        prop_assert!(unitarity_defect(&r.u) < 1e-10);
        Ok(())
    })
}

pub fn parseval() -> Result<(), String> {
    let s = (
        0.5f64..20.0,
        proptest::collection::vec(0.0f64..1.5, 1..=3),
        proptest::collection::vec(0.0f64..(2.0 * PI), 6),
    );
    run(s, |(omega1, q, phases)| {
        let n = q.len();
        let p = ShakingProfile::new(omega1, q, phases[..n].to_vec(), phases[3..3 + n].to_vec()).unwrap();
        let t = tunneling_coefficients(&p, &LatticeGeometry::honeycomb(), 40).unwrap();
        prop_assert!(t.tail_mass(40).abs() < 1e-10);
        Ok(())
    })
}

pub fn generator_vanishing() -> Result<(), String> {
    run((any::<u64>(), 2usize..=5, 5.0f64..50.0, 0.05f64..0.95, -5i32..=5), |(seed, dim, w1, eta, k)| {
        let h = series(seed, w1, eta, dim, [2, 2]);
        let g = generator(&h, &SignGenerator);
        prop_assume!(g.is_ok());
        let g = g.unwrap();
        let t = 2.0 * PI * k as f64 / w1;
        prop_assert!(frobenius(&g.evaluate_at(t)) < 1e-12 * (1.0 + g.norm()));
        Ok(())
    })
}

pub fn commutator_homomorphism() -> Result<(), String> {
    run((any::<u64>(), 2usize..=5, 5.0f64..50.0, 0.05f64..0.95, -10.0f64..10.0), |(seed, dim, w1, eta, t)| {
        let x = series(seed, w1, eta, dim, [2, 1]);
        let y = series(seed.wrapping_add(1), w1, eta, dim, [1, 2]);
        let c = x.commutator(&y).unwrap();
        prop_assert_eq!(c.discarded_norm(), 0.0);
        let direct = commutator(&x.evaluate_at(t), &y.evaluate_at(t));
        prop_assert!(frobenius(&(c.evaluate_at(t) - direct)) < 1e-11 * (1.0 + x.norm() * y.norm()));
        Ok(())
    })
}

pub const SUITES: [(&str, fn() -> Result<(), String>); 5] = [
    ("hermiticity closure", hermiticity_closure),
    ("unitarity", unitarity),
    ("Parseval", parseval),
    ("generator vanishing", generator_vanishing),
    ("commutator homomorphism", commutator_homomorphism),
];
