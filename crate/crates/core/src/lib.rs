//! Dynamic response, noise budget and link-level simulation of Rydberg-atom
//! superheterodyne receivers.
//!
//! The crate is organized bottom-up:
//!
//! - [`atomic`]: four-level Hamiltonian, Lindblad generator, reduction to the
//!   15-dimensional trace-free space, steady states and probe transmission.
//! - [`response`]: small-signal transfer functions, the quantum
//!   transconductance g_q, pole-zero structure, impulse/step responses, κ(iω).
//! - [`rk4`]: fixed-step master-equation integrator used as an oracle.
//! - [`doppler`]: thermal averaging by quadrature and by the closed-form
//!   Gaussian-pole expansion.
//! - [`noise`]: blackbody-radiation correlation, coherence factor, receiver
//!   chain PSDs, noise factors and the sensitivity bound.
//! - [`link`]: single-carrier waveform simulation and MIMO capacity.

pub mod atomic;
pub mod config;
pub mod constants;
pub mod doppler;
pub mod error;
pub mod io;
pub mod linalg;
pub mod link;
pub mod noise;
pub mod operating;
pub mod quadrature;
pub mod response;
pub mod rk4;

pub use config::{AtomicParams, Config, LinkConfig, MimoConfig, ReceiverChain};
pub use error::{Error, Result};
pub use operating::OperatingPoint;
