//! Blackbody-radiation noise, the photodiode/TIA chain and noise factors.
//!
//! All PSDs are double-sided.

use serde::Serialize;

use crate::config::{AtomicParams, ReceiverChain};
use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE, ETA_0, PLANCK, SPEED_OF_LIGHT, TWO_PI};
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Planck spectral radiance B_ν(T) [W·Hz⁻¹·m⁻²·sr⁻¹].
pub fn spectral_radiance(nu: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = PLANCK * nu / (BOLTZMANN * temperature);
    2.0 * nu * nu / (SPEED_OF_LIGHT * SPEED_OF_LIGHT) * PLANCK * nu / x.exp_m1()
}

/// Rayleigh–Jeans limit 2ν²k_BT/c².
pub fn rayleigh_jeans(nu: f64, temperature: f64) -> f64 {
    2.0 * nu * nu * BOLTZMANN * temperature / (SPEED_OF_LIGHT * SPEED_OF_LIGHT)
}

const SERIES_SWITCH: f64 = 1.0;

/// f₀(β) = ∫₋₁¹ e^{iβx} dx = 2 sin β / β.
pub fn f0(beta: f64) -> f64 {
    let b = beta.abs();
    if b < SERIES_SWITCH {
        moment_series(b, 0)
    } else {
        2.0 * b.sin() / b
    }
}

/// f₂(β) = ∫₋₁¹ x² e^{iβx} dx.
pub fn f2(beta: f64) -> f64 {
    let b = beta.abs();
    if b < SERIES_SWITCH {
        moment_series(b, 2)
    } else {
        let (s, c) = b.sin_cos();
        2.0 * (s / b + 2.0 * c / (b * b) - 2.0 * s / (b * b * b))
    }
}

// 2 Σ_k (−1)^k β^{2k} / ((2k)! (2k + n + 1)) for even n.
fn moment_series(b: f64, n: i32) -> f64 {
    let b2 = b * b;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 0..20 {
        let kk = k as f64;
        sum += term / (2.0 * kk + n as f64 + 1.0);
        term *= -b2 / ((2.0 * kk + 1.0) * (2.0 * kk + 2.0));
    }
    2.0 * sum
}

/// Axial BBR field correlation R_n(u) [V²·m⁻²·Hz⁻¹]: the (3,3) entry of
/// the correlation tensor with r̂ along the cell axis.
pub fn bbr_correlation(u: f64, nu: f64, temperature: f64) -> f64 {
    let beta = TWO_PI * nu / SPEED_OF_LIGHT * u.abs();
    std::f64::consts::PI * ETA_0 * spectral_radiance(nu, temperature) * 2.0 * (f0(beta) - f2(beta))
}

/// R_n(u)/R_n(0) as a function of β = k·u.
pub fn normalized_correlation(beta: f64) -> f64 {
    0.75 * (f0(beta) - f2(beta))
}

/// R_n(0) = (8π/3)·η0·B_ν.
pub fn bbr_correlation_at_zero(nu: f64, temperature: f64) -> f64 {
    8.0 * std::f64::consts::PI / 3.0 * ETA_0 * spectral_radiance(nu, temperature)
}

/// Spatial coherence factor ζ(ℓ), ℓ = L/λ_LO.
pub fn coherence_factor(ell: f64) -> Result<f64> {
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::InvalidArgument(format!("ell must be positive, got {ell}")));
    }
    // ζ = (2/ℓ²)∫₀^ℓ (ℓ − u)ρ(2πu) du, split at the zeros of sin(2πu).
    let mut breaks = vec![0.0];
    let mut k = 1;
    while (k as f64) * 0.5 < ell {
        breaks.push(k as f64 * 0.5);
        k += 1;
    }
    breaks.push(ell);
    let tol = Tolerance {
        abs: 1e-12 * ell * ell,
        rel: 1e-12,
        max_segments: 20_000,
    };
    let r = quadrature::integrate(
        |u: f64| (ell - u) * normalized_correlation(TWO_PI * u),
        &breaks,
        tol,
    )?;
    Ok(2.0 * r.value / (ell * ell))
}

/// ℓ = L/λ_LO for the given parameters.
pub fn normalized_length(p: &AtomicParams) -> f64 {
    p.cell_length / p.lambda_lo
}

/// BBR-induced photocurrent PSD (4π/3)η0B_νζL²|g_q|² [A²/Hz].
pub fn bbr_current_psd(gq_abs: f64, cell_length: f64, nu: f64, temperature: f64, zeta: f64) -> f64 {
    4.0 * std::f64::consts::PI / 3.0
        * ETA_0
        * spectral_radiance(nu, temperature)
        * zeta
        * (cell_length * gq_abs).powi(2)
}

/// Same PSD written as ½·ζ·L²|g_q|²·R_n(0).
pub fn bbr_current_psd_from_correlation(
    gq_abs: f64,
    cell_length: f64,
    nu: f64,
    temperature: f64,
    zeta: f64,
) -> f64 {
    0.5 * zeta * (cell_length * gq_abs).powi(2) * bbr_correlation_at_zero(nu, temperature)
}

/// Best-case SNR with only BBR noise, for a USB signal of double-sided PSD
/// `p_sig` [V²·m⁻²·Hz⁻¹].
pub fn snr_bound(p_sig: f64, nu: f64, temperature: f64, zeta: f64) -> f64 {
    0.25 * p_sig / bbr_field_psd(nu, temperature, zeta)
}

/// Minimum detectable in-phase field sqrt((4π/3)η0B_νζ) [V·m⁻¹·Hz^−½].
pub fn sensitivity(nu: f64, temperature: f64, zeta: f64) -> f64 {
    bbr_field_psd(nu, temperature, zeta).sqrt()
}

fn bbr_field_psd(nu: f64, temperature: f64, zeta: f64) -> f64 {
    4.0 * std::f64::consts::PI / 3.0 * ETA_0 * spectral_radiance(nu, temperature) * zeta
}

/// Photocurrent PSDs of the internal sources [A²/Hz].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct InternalNoise {
    pub shot: f64,
    pub rs_thermal: f64,
    pub rin: f64,
}

pub fn internal_noise_psds(temperature: f64, chain: &ReceiverChain, i_ph: f64) -> InternalNoise {
    InternalNoise {
        shot: ELEMENTARY_CHARGE * i_ph,
        rs_thermal: 2.0 * BOLTZMANN * temperature / chain.r_s,
        rin: i_ph * i_ph * 10f64.powf(chain.rin_dbc_hz / 10.0),
    }
}

/// TIA output PSD at the matched load for an injected current PSD [W/Hz].
pub fn tia_output_psd(current_psd: f64, chain: &ReceiverChain) -> f64 {
    current_psd * (chain.r_t * chain.k_c()).powi(2) / chain.r_l
}

/// Combined circuit thermal PSD at the load: TIA current and voltage noise
/// plus the bias-resistor Johnson noise [W/Hz].
pub fn circuit_thermal_psd(chain: &ReceiverChain, temperature: f64) -> f64 {
    let kc = chain.k_c();
    chain.r_t * chain.r_t / (2.0 * chain.r_l)
        * ((chain.i_n_tia * kc).powi(2)
            + (chain.v_n_tia / (chain.r_s + chain.z_in)).powi(2)
            + 4.0 * BOLTZMANN * temperature / chain.r_s)
}

/// TIA input-referred noise, (I_nK_c)²/2 + (V_n/(R_s+Z_in))²/2 [A²/Hz].
pub fn tia_input_noise(chain: &ReceiverChain) -> f64 {
    0.5 * (chain.i_n_tia * chain.k_c()).powi(2)
        + 0.5 * (chain.v_n_tia / (chain.r_s + chain.z_in)).powi(2)
}

/// Equivalent aperture 3λ²/(8π) of a short dipole [m²].
pub fn dipole_aperture(lambda: f64) -> f64 {
    3.0 * lambda * lambda / (8.0 * std::f64::consts::PI)
}

/// Noise factors and power gains of the quantum LNA and TIA stages.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NoiseFactors {
    pub f_q: f64,
    pub g_q: f64,
    pub f_tia: f64,
    pub g_tia: f64,
    pub f_total: f64,
    pub g_total: f64,
}

/// Noise factors for a probe field amplitude `e_sig` [V/m]; the result is
/// independent of `e_sig`.
#[allow(clippy::too_many_arguments)]
pub fn noise_factors_at_field(
    temperature: f64,
    chain: &ReceiverChain,
    gq_abs: f64,
    cell_length: f64,
    psd_delta_i_n: f64,
    lambda: f64,
    e_sig: f64,
) -> Result<NoiseFactors> {
    let a_eq = dipole_aperture(lambda);
    let kc = chain.k_c();
    let lg = cell_length * gq_abs;
    let snr_in = a_eq * e_sig * e_sig / (2.0 * ETA_0 * BOLTZMANN * temperature);
    let snr_out = (lg * e_sig).powi(2) / 4.0 / psd_delta_i_n;
    let f_q = snr_in / snr_out;
    let g_q = (lg * e_sig * kc).powi(2) * chain.z_in / 2.0 / (e_sig * e_sig * a_eq / (2.0 * ETA_0));
    if g_q == 0.0 || !g_q.is_finite() {
        return Err(Error::DivisionByZero("quantum LNA power gain is zero"));
    }
    let f_tia = 1.0 + tia_input_noise(chain) / psd_delta_i_n;
    let g_tia = chain.r_t * chain.r_t / (chain.z_in * chain.r_l);
    Ok(NoiseFactors {
        f_q,
        g_q,
        f_tia,
        g_tia,
        f_total: f_q + (f_tia - 1.0) / g_q,
        g_total: g_q * g_tia,
    })
}

pub fn noise_factors(
    temperature: f64,
    chain: &ReceiverChain,
    gq_abs: f64,
    cell_length: f64,
    psd_delta_i_n: f64,
    lambda: f64,
) -> Result<NoiseFactors> {
    noise_factors_at_field(temperature, chain, gq_abs, cell_length, psd_delta_i_n, lambda, 1.0)
}

/// Complete noise budget at one operating point.
#[derive(Clone, Debug, Serialize)]
pub struct NoiseBudget {
    pub temperature_k: f64,
    pub zeta: f64,
    pub gq_abs_s: f64,
    pub i_ph_a: f64,
    /// Photocurrent PSDs [A²/Hz].
    pub bbr: f64,
    pub shot: f64,
    pub rs_thermal: f64,
    pub rin: f64,
    pub total_current: f64,
    /// TIA-output PSDs at the load [W/Hz].
    pub out_bbr: f64,
    pub out_shot: f64,
    pub out_rs_thermal: f64,
    pub out_rin: f64,
    pub out_circuit_thermal: f64,
    pub factors: NoiseFactors,
    /// BBR-limited sensitivity for the actual ζ [V·m⁻¹·Hz^−½].
    pub sensitivity: f64,
}

impl NoiseBudget {
    pub fn new(
        p: &AtomicParams,
        chain: &ReceiverChain,
        gq_abs: f64,
        i_ph: f64,
        zeta: f64,
    ) -> Result<Self> {
        let t = p.temperature;
        let nu = p.f_lo();
        let bbr = bbr_current_psd(gq_abs, p.cell_length, nu, t, zeta);
        let int = internal_noise_psds(t, chain, i_ph);
        let total = bbr + int.shot + int.rs_thermal + int.rin;
        let factors = noise_factors(t, chain, gq_abs, p.cell_length, total, p.lambda_lo)?;
        Ok(Self {
            temperature_k: t,
            zeta,
            gq_abs_s: gq_abs,
            i_ph_a: i_ph,
            bbr,
            shot: int.shot,
            rs_thermal: int.rs_thermal,
            rin: int.rin,
            total_current: total,
            out_bbr: tia_output_psd(bbr, chain),
            out_shot: tia_output_psd(int.shot, chain),
            out_rs_thermal: tia_output_psd(int.rs_thermal, chain),
            out_rin: tia_output_psd(int.rin, chain),
            out_circuit_thermal: circuit_thermal_psd(chain, t),
            factors,
            sensitivity: sensitivity(nu, t, zeta),
        })
    }
}

/// One point of a bias-resistor sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NfPoint {
    pub r_s: f64,
    pub factors: NoiseFactors,
}

pub fn nf_sweep(
    p: &AtomicParams,
    chain: &ReceiverChain,
    gq_abs: f64,
    i_ph: f64,
    zeta: f64,
    r_s_grid: &[f64],
) -> Result<Vec<NfPoint>> {
    r_s_grid
        .iter()
        .map(|&r_s| {
            let c = chain.with_r_s(r_s);
            Ok(NfPoint {
                r_s,
                factors: NoiseBudget::new(p, &c, gq_abs, i_ph, zeta)?.factors,
            })
        })
        .collect()
}

/// Index of the smallest total noise factor.
pub fn nf_argmin(points: &[NfPoint]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.factors.f_total.total_cmp(&b.1.factors.f_total))
        .map(|(i, _)| i)
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
