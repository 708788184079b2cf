//! The quantities most commands need at one configuration: probe profile,
//! photocurrent, g_q at the IF and the BBR coherence factor.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::atomic::{self, ProbeProfile};
use crate::config::{AtomicParams, ReceiverChain};
use crate::error::Result;
use crate::noise::{self, NfPoint, NoiseBudget};
use crate::response::{self, Realization};

#[derive(Clone, Debug)]
pub struct OperatingPoint {
    pub profile: ProbeProfile,
    pub i_ph: f64,
    pub realization: Realization,
    pub f_if_hz: f64,
    pub gq_at_if: Complex64,
    pub gq_dc: f64,
    pub ell: f64,
    pub zeta: f64,
}

impl OperatingPoint {
    pub fn new(p: &AtomicParams, f_if_hz: f64) -> Result<Self> {
        Self::with_slices(p, f_if_hz, 1)
    }

    pub fn with_slices(p: &AtomicParams, f_if_hz: f64, slices: usize) -> Result<Self> {
        let profile = atomic::probe_transmission(p, slices)?;
        let i_ph = profile.photocurrent(p);
        let realization = response::gq_realization(p, &profile);
        let gq_at_if = realization.eval(Complex64::new(0.0, 2.0 * PI * f_if_hz), 0)?;
        let gq_dc = realization.eval(Complex64::new(0.0, 0.0), 0)?.re;
        let ell = noise::normalized_length(p);
        let zeta = noise::coherence_factor(ell)?;
        Ok(Self {
            profile,
            i_ph,
            realization,
            f_if_hz,
            gq_at_if,
            gq_dc,
            ell,
            zeta,
        })
    }

    pub fn noise_budget(&self, p: &AtomicParams, chain: &ReceiverChain) -> Result<NoiseBudget> {
        NoiseBudget::new(p, chain, self.gq_at_if.norm(), self.i_ph, self.zeta)
    }

    pub fn nf_sweep(&self, p: &AtomicParams, chain: &ReceiverChain, r_s: &[f64]) -> Result<Vec<NfPoint>> {
        noise::nf_sweep(p, chain, self.gq_at_if.norm(), self.i_ph, self.zeta, r_s)
    }
}
