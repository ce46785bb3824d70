//! Truncated Fock-space linear algebra.
//!
//! A [`SpaceLayout`] is an ordered list of tensor factors: at most one bosonic
//! mode truncated to `cutoff` Fock levels (`|0⟩ … |cutoff-1⟩`) and any number of
//! qubits with basis order `|g⟩ = 0`, `|e⟩ = 1`. Factor 0 is the slowest-varying
//! index of the composite basis.

mod layout;
mod ops;
mod propagate;
mod state;

pub use layout::{Factor, SpaceLayout};
pub use ops::{
    annihilation, coherent_state, coherent_tail, creation, displacement, embed,
    number_operator, qubit, Truncated,
};
pub use propagate::{
    evolve, evolve_td, evolve_td_observed, expm_hermitian, BlockHermitian, BlockPropagator,
    HermitianEigen, Propagate, Propagator,
};
pub use state::{partial_trace, DensityMatrix, Operator, StateVector};

/// Tolerance used when checking Hermiticity, relative to the largest entry.
pub const HERMITIAN_TOL: f64 = 1e-9;
