//! Quantum Zeno effect in a resonantly driven two-level system.
//!
//! Two measurement schemes are modelled:
//!
//! * [`pulsed`]: `n` instantaneous selective probes spread over half a Rabi
//!   period, with closed-form survival laws and a stochastic run simulator.
//! * [`continuous`]: state-selective tunneling at rate Γ, described by a
//!   non-Hermitian generator, its closed-form propagator and a quantum-jump
//!   trajectory engine.
//!
//! [`qmath`] provides the 2x2 algebra and two numerical propagator oracles,
//! [`analysis`] the cross-scheme decay-rate comparison and binomial
//! statistics, [`ensemble`] the (optionally parallel) ensemble runner and
//! [`rng`] the counter-based random streams that make ensembles
//! reproducible at any thread count.

pub mod analysis;
pub mod continuous;
pub mod ensemble;
pub mod error;
pub mod pulsed;
pub mod qmath;
pub mod rng;

pub use error::{Result, ZenoError};
pub use qmath::{Complex, Mat2, TwoLevelState};
pub use rng::RngStream;
