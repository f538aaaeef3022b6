//! Effective Hamiltonians for polychromatically driven quantum systems.
//!
//! The core is a multi-mode Fourier operator algebra ([`modes`]) on which
//! two independent routes to the effective Hamiltonian are built: numerical
//! integration of the flow equations ([`flow`]) and the closed-form
//! high-frequency expansion ([`hfe`]). Around them sit exact propagation
//! and fidelity checks ([`propagator`]), the validation models
//! ([`models`]), drive design for a three-level system ([`lambda`]) and the
//! shaken honeycomb lattice pipeline ([`chern`]).
//!
//! The algebra, flow, expansion and propagation kernels are generic over
//! the real scalar type; the aliases below fix it to `f64`.

pub mod chern;
pub mod error;
pub mod flow;
pub mod hfe;
pub mod lab;
pub mod lambda;
pub mod linalg;
pub mod models;
pub mod modes;
pub mod pauli;
pub mod propagator;
pub mod random;
pub mod scalar;

pub use error::{Error, Result};
pub use flow::{default_f, integrate_flow, rhs_flow, FlowGenerator, FlowOptions, FlowResult, SignGenerator};
pub use hfe::{
    effective_hamiltonian, effective_order0, effective_order1, effective_order1_simplified, EffectiveExpansion, Order,
};
pub use modes::{FourierOperator, FrequencyBasis, ModeIndex};
pub use scalar::{CMatrix, Real};

pub type Matrix = scalar::CMatrix<f64>;
pub type Operator = modes::FourierOperator<f64>;
pub type Basis = modes::FrequencyBasis<f64>;
pub type Expansion = hfe::EffectiveExpansion<f64>;
pub type Flow = flow::FlowResult<f64>;
