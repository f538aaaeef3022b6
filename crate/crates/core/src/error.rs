use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("operators are defined over different frequency bases")]
    BasisMismatch,

    #[error("mode vector has length {found}, basis has {expected} frequencies")]
    ModeLength { expected: usize, found: usize },

    #[error("invalid frequency basis: {0}")]
    InvalidBasis(String),

    #[error("resonant denominator {value:e} in {context} at mode {mode:?}")]
    Resonance {
        context: &'static str,
        mode: Vec<i32>,
        value: f64,
    },

    #[error("invalid flow generator: {0}")]
    InvalidGenerator(String),

    #[error("flow did not converge: off-mode norm {residual:e} after {steps} steps at s = {s}")]
    FlowNotConverged { residual: f64, s: f64, steps: usize },

    #[error("flow step size underflow at s = {s}")]
    StepUnderflow { s: f64 },

    #[error("truncation discarded norm {discarded:e} exceeds limit {limit:e}")]
    TruncationDiscard { discarded: f64, limit: f64 },

    #[error("propagation tolerance {tol:e} unreachable: best step-halving difference {achieved:e} with {steps} steps")]
    PropagationTolerance { tol: f64, achieved: f64, steps: usize },

    #[error("quadrature did not converge to {tol:e} (last change {change:e})")]
    Quadrature { tol: f64, change: f64 },

    #[error("Fourier table tail mass {mass:e} exceeds {limit:e}; raise the cutoff")]
    TailMass { mass: f64, limit: f64 },

    #[error("no root found: residual {residual:e} after {iterations} iterations")]
    NoRoot { residual: f64, iterations: usize },

    #[error("gap closed: h+ = {h_plus:e}, h- = {h_minus:e}")]
    PhaseBoundary { h_plus: f64, h_minus: f64 },

    #[error("symmetry sector is empty")]
    EmptySector,

    #[error("sector with {0} states exceeds the configured memory budget")]
    SectorTooLarge(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
