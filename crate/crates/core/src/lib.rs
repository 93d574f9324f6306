//! Exact steady states of the driven-dissipative Kerr resonator.
//!
//! The coherently driven model with one-photon loss has a closed-form
//! steady-state wavefunction in the doubled (Keldysh) space; adding a
//! two-photon drive and two-photon loss keeps it solvable through a displaced
//! basis. Mean-field branches and a truncated Lindblad solver sit alongside
//! for comparison.

pub mod band;
pub mod error;
pub mod exact_linear;
pub mod exact_twophoton;
pub mod keldysh_ops;
pub mod lindblad;
pub mod meanfield;
pub mod model;
pub mod par;
pub mod specfun;
pub mod wavefunction;

pub use error::{Error, Result};
pub use model::{derive_linear, derive_twophoton, LinearDerived, ModelParams, TwoPhotonDerived};
pub use par::Execution;
pub use wavefunction::{CorrelationResult, SteadyWavefunction};
