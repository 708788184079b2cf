//! Discrete-time equivalent baseband and MIMO capacity.
//!
//! Model: y = √(P_T/P_qref)·H·x + w with E[xxᴴ] = Q, tr Q = 1 and
//! w ~ CN(0, σ_w²I). H = √β·G where β is the line-of-sight power gain
//! between isotropic ports and G has i.i.d. CN(0, 1) entries, so
//! E‖H‖_F² = n²β.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::constants::{BOLTZMANN, ETA_0};
use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMat, CVec};
use crate::link::budget::{self, NoiseInputs};
use crate::operating::OperatingPoint;
use crate::quadrature::{self, Tolerance};

/// Circular complex Gaussian sample of variance `var`.
pub fn complex_gaussian<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    Complex64::new(a * s, b * s)
}

/// n×m matrix with i.i.d. CN(0, 1) entries.
pub fn rayleigh_channel<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng, 1.0))
}

/// One channel use y = scale·H·x + w.
pub fn discrete_channel_step<R: Rng>(x: &CVec, h: &CMat, scale: f64, sigma_w: f64, rng: &mut R) -> CVec {
    let mut y = h * x * cr(scale);
    if sigma_w > 0.0 {
        y.iter_mut().for_each(|v| *v += complex_gaussian(rng, sigma_w * sigma_w));
    }
    y
}

/// Tapped-delay-line channel y(n) = scale·Σ_m H(m)·x(n − m) + w(n); inputs
/// before the first symbol are zero.
pub fn multipath_channel<R: Rng>(
    xs: &[CVec],
    taps: &[CMat],
    scale: f64,
    sigma_w: f64,
    rng: &mut R,
) -> Vec<CVec> {
    let rows = taps.first().map_or(0, |h| h.nrows());
    (0..xs.len())
        .map(|n| {
            let mut y = CVec::zeros(rows);
            for (m, h) in taps.iter().enumerate().take(n + 1) {
                y += h * &xs[n - m];
            }
            y *= cr(scale);
            if sigma_w > 0.0 {
                y.iter_mut().for_each(|v| *v += complex_gaussian(rng, sigma_w * sigma_w));
            }
            y
        })
        .collect()
}

/// Water-filling powers over sub-channel gains `g` (SNR per unit power)
/// with total power 1.
pub fn water_fill(g: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..g.len()).filter(|&i| g[i] > 0.0).collect();
    idx.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
    let mut p = vec![0.0; g.len()];
    // Largest k with a positive water level.
    let mut level = 0.0;
    let mut active = 0;
    let mut inv_sum = 0.0;
    for (k, &i) in idx.iter().enumerate() {
        inv_sum += 1.0 / g[i];
        let mu = (1.0 + inv_sum) / (k + 1) as f64;
        if mu > 1.0 / g[i] {
            level = mu;
            active = k + 1;
        } else {
            break;
        }
    }
    for &i in idx.iter().take(active) {
        p[i] = level - 1.0 / g[i];
    }
    p
}

/// Squared singular values of `h`.
pub fn eigen_gains(h: &CMat) -> Vec<f64> {
    h.clone().svd(false, false).singular_values.iter().map(|s| s * s).collect()
}

/// log₂det(I + snr·H·Q·Hᴴ) with Q from water-filling.
pub fn capacity_waterfill(h: &CMat, snr: f64) -> f64 {
    let g: Vec<f64> = eigen_gains(h).into_iter().map(|l| l * snr).collect();
    let p = water_fill(&g);
    g.iter().zip(&p).map(|(gi, pi)| (1.0 + gi * pi).log2()).sum()
}

/// log₂det(I + (snr/n_t)·H·Hᴴ).
pub fn capacity_equal(h: &CMat, snr: f64) -> f64 {
    let nt = h.ncols() as f64;
    eigen_gains(h).into_iter().map(|l| (1.0 + l * snr / nt).log2()).sum()
}

/// Sine integral Si(x) = ∫₀ˣ sin t / t dt.
pub fn si(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let f = |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t };
    let v = quadrature::integrate(f, &breaks(x.abs()), tol())?.value;
    Ok(v.copysign(x))
}

/// Cosine integral Ci(x) = γ + ln x + ∫₀ˣ (cos t − 1)/t dt for x > 0.
pub fn ci(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument("Ci needs x > 0".into()));
    }
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let f = |t: f64| if t == 0.0 { 0.0 } else { (t.cos() - 1.0) / t };
    Ok(EULER_GAMMA + x.ln() + quadrature::integrate(f, &breaks(x), tol())?.value)
}

fn breaks(x: f64) -> Vec<f64> {
    let n = (x / PI).ceil().max(1.0) as usize;
    (0..=n).map(|k| x * k as f64 / n as f64).collect()
}

fn tol() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-12,
        max_segments: 4000,
    }
}

/// Self impedance of a thin half-wave dipole by the induced-EMF method [Ω].
pub fn dipole_self_impedance() -> Result<Complex64> {
    let k = ETA_0 / (4.0 * PI);
    let two_pi = 2.0 * PI;
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    Ok(Complex64::new(
        k * (EULER_GAMMA + two_pi.ln() - ci(two_pi)?),
        k * si(two_pi)?,
    ))
}

/// Mutual impedance of two parallel side-by-side half-wave dipoles at
/// spacing `d` wavelengths [Ω].
pub fn dipole_mutual_impedance(d: f64) -> Result<Complex64> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument("dipole spacing must be > 0".into()));
    }
    let k = ETA_0 / (4.0 * PI);
    let kd = 2.0 * PI * d;
    let kl = PI;
    let r = (kd * kd + kl * kl).sqrt();
    let (u0, u1, u2) = (kd, r + kl, r - kl);
    Ok(Complex64::new(
        k * (2.0 * ci(u0)? - ci(u1)? - ci(u2)?),
        -k * (2.0 * si(u0)? - si(u1)? - si(u2)?),
    ))
}

/// Receive coupling matrix of a uniform linear array of half-wave dipoles
/// with conjugate-matched loads, C = (Z₁₁ + Z_L)(Z + Z_L·I)⁻¹. Without
/// coupling C = I.
pub fn coupling_matrix(n: usize, spacing_wavelengths: f64) -> Result<CMat> {
    let z11 = dipole_self_impedance()?;
    let zm: Vec<Complex64> = (1..n)
        .map(|k| dipole_mutual_impedance(k as f64 * spacing_wavelengths))
        .collect::<Result<_>>()?;
    let zl = z11.conj();
    let mut z = CMat::from_fn(n, n, |i, j| if i == j { z11 } else { zm[i.abs_diff(j) - 1] });
    for i in 0..n {
        z[(i, i)] += zl;
    }
    Ok(linalg::inverse(&z, "array impedance")? * (z11 + zl))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SvdWaterfill,
    Equal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    Quantum,
    ClassicalMc,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::SvdWaterfill => "svd_waterfill",
            Scheme::Equal => "equal",
        }
    }
}

impl Receiver {
    pub fn name(self) -> &'static str {
        match self {
            Receiver::Quantum => "quantum",
            Receiver::ClassicalMc => "classical_mc",
        }
    }
}

/// Per-receiver SNR scales and the classical coupling matrix.
#[derive(Clone, Debug)]
pub struct MimoSetup {
    pub n_antennas: usize,
    /// Line-of-sight power gain between isotropic ports (incl. BS gain).
    pub path_gain: f64,
    /// 1/(P_qref·σ_w²) [1/W].
    pub quantum_inv_noise: f64,
    /// Classical UE antenna gain (linear).
    pub classical_antenna_gain: f64,
    /// k_B·T·F_c·W [W].
    pub classical_noise_power: f64,
    pub coupling: CMat,
}

impl MimoSetup {
    /// Setup from a config: quantum noise from the link noise budget,
    /// classical coupling from `coupling` or the induced-EMF array model.
    pub fn from_config(cfg: &Config, coupling: Option<CMat>) -> Result<Self> {
        let p = cfg.atomic_params()?;
        let n = cfg.mimo.n_antennas;
        let op = OperatingPoint::new(&p, cfg.link.f_if_hz)?;
        let gq = op.gq_at_if.norm();
        let noise = budget::baseband_noise_psd(
            &cfg.chain,
            &NoiseInputs {
                v_ref: cfg.link.v_ref_v,
                cell_length: p.cell_length,
                gq_at_if: gq,
                zeta: op.zeta,
                e_n_bb: budget::bbr_field_density(p.f_lo(), p.temperature),
                i_ph: op.i_ph,
                temperature: p.temperature,
            },
        );
        let p_qref = budget::qref_power(&cfg.chain, cfg.link.v_ref_v, p.cell_length, gq, p.lambda_lo);
        let coupling = match coupling {
            Some(c) if c.nrows() != n || c.ncols() != n => {
                return Err(Error::InvalidArgument(format!(
                    "coupling matrix is {}x{}, expected {n}x{n}",
                    c.nrows(),
                    c.ncols()
                )))
            }
            Some(c) => c,
            None => coupling_matrix(n, cfg.mimo.element_spacing_wavelengths)?,
        };
        Ok(Self {
            n_antennas: n,
            path_gain: budget::los_path_gain(&cfg.link, p.lambda_lo),
            quantum_inv_noise: 1.0 / (p_qref * noise.variance(cfg.mimo.bandwidth_hz)),
            classical_antenna_gain: budget::db_to_lin(cfg.link.ue_gain_classical_db),
            classical_noise_power: Self::classical_noise(
                p.temperature,
                cfg.mimo.classical_noise_figure_db,
                cfg.mimo.bandwidth_hz,
            ),
            coupling,
        })
    }

    pub fn classical_noise(temperature: f64, f_c_db: f64, bandwidth: f64) -> f64 {
        BOLTZMANN * temperature * 10f64.powf(f_c_db / 10.0) * bandwidth
    }

    pub fn snr(&self, receiver: Receiver, p_t: f64) -> f64 {
        match receiver {
            Receiver::Quantum => p_t * self.path_gain * self.quantum_inv_noise,
            Receiver::ClassicalMc => {
                p_t * self.path_gain * self.classical_antenna_gain / self.classical_noise_power
            }
        }
    }
}

/// Capacity samples for one (scheme, receiver, P_T) cell.
#[derive(Clone, Debug, Serialize)]
pub struct CapacitySamples {
    pub p_t_dbm: f64,
    pub scheme: Scheme,
    pub receiver: Receiver,
    pub samples: Vec<f64>,
}

impl CapacitySamples {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Empirical quantile by linear interpolation between order statistics.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut s = self.samples.clone();
        s.sort_by(f64::total_cmp);
        let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
    }
}

/// Channel draw for `trial`: stream `trial` of the ChaCha20 generator keyed
/// by `seed`, so results do not depend on scheduling.
pub fn trial_channel(seed: u64, trial: u64, n: usize) -> CMat {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rayleigh_channel(n, n, &mut rng)
}

/// Monte Carlo capacities on a P_T grid [dBm]. Every scheme/receiver
/// combination sees the same channel draws.
pub fn mimo_capacity(setup: &MimoSetup, p_t_dbm: &[f64], trials: usize, seed: u64) -> Result<Vec<CapacitySamples>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let n = setup.n_antennas;
    let per_trial: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let g = trial_channel(seed, trial, n);
            let coupled = &setup.coupling * &g;
            let mut row = Vec::with_capacity(p_t_dbm.len() * 4);
            for &dbm in p_t_dbm {
                let p_t = 10f64.powf((dbm - 30.0) / 10.0);
                for receiver in [Receiver::Quantum, Receiver::ClassicalMc] {
                    let h = if receiver == Receiver::Quantum { &g } else { &coupled };
                    let snr = setup.snr(receiver, p_t);
                    row.push(capacity_waterfill(h, snr));
                    row.push(capacity_equal(h, snr));
                }
            }
            row
        })
        .collect();
    let mut out = Vec::new();
    let mut col = 0;
    for &dbm in p_t_dbm {
        for receiver in [Receiver::Quantum, Receiver::ClassicalMc] {
            for scheme in [Scheme::SvdWaterfill, Scheme::Equal] {
                out.push(CapacitySamples {
                    p_t_dbm: dbm,
                    scheme,
                    receiver,
                    samples: per_trial.iter().map(|r| r[col]).collect(),
                });
                col += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_wave_dipole_impedances() {
        let z11 = dipole_self_impedance().unwrap();
        assert!((z11.re - 73.08).abs() < 0.01 && (z11.im - 42.52).abs() < 0.01, "{z11}");
        // Tabulated induced-EMF value at half-wavelength spacing.
        let z12 = dipole_mutual_impedance(0.5).unwrap();
        assert!((z12.re + 12.5).abs() < 0.2 && (z12.im + 29.9).abs() < 0.2, "{z12}");
    }

    #[test]
    fn water_filling_sums_to_one() {
        let p = water_fill(&[10.0, 1.0, 0.01, 0.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(p[3], 0.0);
        assert!(p[0] > p[1]);
    }

    #[test]
    fn wide_spacing_decouples() {
        let c = coupling_matrix(4, 50.0).unwrap();
        assert!((c - CMat::identity(4, 4)).norm() < 0.05);
    }
}
