//! Holonomic single-qubit gates on a photon shared by two optical cavities
//! coupled through a common mechanical oscillator.
//!
//! Units: time in μs, all frequencies and rates angular (rad/μs).

pub mod error;
pub mod experiments;
pub mod fock;
pub mod holonomy;
pub mod lindblad;
pub mod model;

pub use error::{Error, Result};
pub use fock::{CompositeSpace, ModeId, Operator, QState, C64};
pub use holonomy::{GateName, GateSpec, PulsePlan};
pub use lindblad::{IntegratorConfig, NoiseParams};
pub use model::{BlochAngles, CouplingParams, RateConvention};
