//! Randomized property suites (1000 cases each) and the acceptance runner
//! in `tests/acceptance.rs`.
//!
//! The suites return their first counterexample as an error string so the
//! acceptance runner can report them next to the other criteria.

pub mod properties;

#[cfg(test)]
mod tests {
    use crate::properties;

    #[test]
    fn hermiticity_closure() {
        properties::hermiticity_closure().unwrap();
    }

    #[test]
    fn unitarity() {
        properties::unitarity().unwrap();
    }

    #[test]
    fn parseval() {
        properties::parseval().unwrap();
    }

    #[test]
    fn generator_vanishing() {
        properties::generator_vanishing().unwrap();
    }

    #[test]
    fn commutator_homomorphism() {
        properties::commutator_homomorphism().unwrap();
    }
}
