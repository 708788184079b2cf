//! Link budget and the equivalent-baseband noise model.
//!
//! Baseband quantities are normalized to the ADC reference voltage, so a
//! PSD here has units of 1/Hz and the channel scale is √(P_T/P_qref)·H.

use std::f64::consts::PI;

use serde::Serialize;

use crate::config::{LinkConfig, ReceiverChain};
use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE, ETA_0};
use crate::noise;

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Effective isotropic radiated power of the base station [W].
pub fn eirp(cfg: &LinkConfig) -> f64 {
    dbm_to_w(cfg.tx_power_dbm) * db_to_lin(cfg.bs_gain_db)
}

/// Peak field amplitude of the line-of-sight signal at the receiver,
/// |E| = sqrt(2η₀·EIRP/(4πd²)) [V/m].
pub fn los_field_strength(cfg: &LinkConfig) -> f64 {
    (2.0 * ETA_0 * eirp(cfg) / (4.0 * PI * cfg.distance_m * cfg.distance_m)).sqrt()
}

/// Free-space power gain |H|² between isotropic ports, including the base
/// station antenna gain.
pub fn los_path_gain(cfg: &LinkConfig, lambda: f64) -> f64 {
    db_to_lin(cfg.bs_gain_db) * (lambda / (4.0 * PI * cfg.distance_m)).powi(2)
}

/// Quantum reference power P_qref [W]:
/// 1/√P_qref = R_T·K_c·L·|g_q(i2πf_IF)|·sqrt(8πη₀/λ²) / (2V_ref).
pub fn qref_power(chain: &ReceiverChain, v_ref: f64, cell_length: f64, gq_at_if: f64, lambda: f64) -> f64 {
    let inv_sqrt = chain.r_t * chain.k_c() * cell_length * gq_at_if
        * (8.0 * PI * ETA_0 / (lambda * lambda)).sqrt()
        / (2.0 * v_ref);
    1.0 / (inv_sqrt * inv_sqrt)
}

/// Baseband noise PSD components [1/Hz].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BasebandNoise {
    pub n_bbr: f64,
    pub n_shot: f64,
    pub n_tia: f64,
    pub n_th: f64,
    pub total: f64,
    /// Johnson term recomputed from the load-referred circuit thermal PSD.
    pub n_th_via_load: f64,
}

impl BasebandNoise {
    /// Discrete-time noise variance σ_w² = W·PSD.
    pub fn variance(&self, bandwidth: f64) -> f64 {
        bandwidth * self.total
    }
}

/// Inputs of [`baseband_noise_psd`] that are not part of the chain.
#[derive(Clone, Copy, Debug)]
pub struct NoiseInputs {
    pub v_ref: f64,
    pub cell_length: f64,
    pub gq_at_if: f64,
    pub zeta: f64,
    /// BBR field amplitude density E_n,bb [V/m/√Hz].
    pub e_n_bb: f64,
    pub i_ph: f64,
    pub temperature: f64,
}

/// E_n,bb such that the baseband BBR term equals the photocurrent BBR PSD
/// mapped through the same TIA/ADC scaling as the shot term.
pub fn bbr_field_density(nu: f64, temperature: f64) -> f64 {
    noise::bbr_correlation_at_zero(nu, temperature).sqrt()
}

pub fn baseband_noise_psd(chain: &ReceiverChain, x: &NoiseInputs) -> BasebandNoise {
    let kc = chain.k_c();
    let rt = chain.r_t;
    let v = x.v_ref;
    let n_bbr = 0.5
        * (rt * kc * x.cell_length * x.gq_at_if * x.zeta.sqrt() * 2f64.sqrt() * x.e_n_bb
            / (2f64.sqrt() * v))
            .powi(2);
    let n_shot = 0.5 * (rt * kc * (2.0 * ELEMENTARY_CHARGE * x.i_ph).sqrt() / v).powi(2);
    let n_tia = 0.5 * (chain.v_n_tia * rt / (v * (chain.z_in + chain.r_s))).powi(2)
        + 0.5 * (chain.i_n_tia * kc * rt / v).powi(2);
    let n_th = 0.5 * (kc * rt / v * (4.0 * BOLTZMANN * x.temperature / chain.r_s).sqrt()).powi(2);

    // Load-referred route: the circuit thermal PSD at R_L minus its TIA part,
    // rescaled to the ADC. It carries no K_c on the Johnson term.
    let load = noise::circuit_thermal_psd(chain, x.temperature) * chain.r_l / (v * v);
    let n_th_via_load = (load - n_tia) * kc * kc;

    BasebandNoise {
        n_bbr,
        n_shot,
        n_tia,
        n_th,
        total: n_bbr + n_shot + n_tia + n_th,
        n_th_via_load,
    }
}

/// Per-antenna received SNR of the equivalent baseband model,
/// P_T·|H|²/(P_qref·σ_w²).
pub fn quantum_snr(p_t: f64, path_gain: f64, p_qref: f64, sigma_w2: f64) -> f64 {
    p_t * path_gain / (p_qref * sigma_w2)
}

/// Input-referred noise PSD that would give `snr` for the received power
/// `p_rx` in bandwidth `w` [dBm/Hz].
pub fn equivalent_noise_psd_dbm(p_rx: f64, snr_db: f64, w: f64) -> f64 {
    w_to_dbm(p_rx) - snr_db - 10.0 * w.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    #[test]
    fn field_strength_spreading() {
        let cfg = Config::cs133_default().link;
        let e1 = los_field_strength(&cfg);
        let far = LinkConfig {
            distance_m: 2.0 * cfg.distance_m,
            ..cfg.clone()
        };
        assert!((los_field_strength(&far) / e1 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn v_ref_cancels_in_snr() {
        let chain = Config::cs133_default().chain;
        let snr = |v: f64| {
            let x = NoiseInputs {
                v_ref: v,
                cell_length: 0.02,
                gq_at_if: 1e-3,
                zeta: 0.9,
                e_n_bb: 1e-7,
                i_ph: 1e-5,
                temperature: 300.0,
            };
            let pq = qref_power(&chain, v, 0.02, 1e-3, 0.043);
            quantum_snr(1e-2, 1e-10, pq, baseband_noise_psd(&chain, &x).variance(1e5))
        };
        assert!((snr(1.0) / snr(3.7) - 1.0).abs() < 1e-12);
    }
}
