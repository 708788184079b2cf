//! Waveform-level single-carrier simulation and the discrete-time
//! equivalent baseband with its MIMO extension.

pub mod budget;
pub mod mimo;
pub mod pulse;
pub mod qam;
pub mod waveform;

pub use budget::{baseband_noise_psd, los_field_strength, qref_power, BasebandNoise};
pub use mimo::{discrete_channel_step, mimo_capacity};
pub use waveform::{simulate_single_carrier, Mode, ScOptions, SingleCarrierResult};
