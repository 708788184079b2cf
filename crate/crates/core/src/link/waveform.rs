//! Continuous-time single-carrier simulation through the full receive chain.
//!
//! Tx symbols → pulse train x_BB(t) → RF envelope E₀·x_BB(t)·e^{iω_IF t}
//! relative to the LO → atoms → photocurrent → TIA → IQ downconversion at
//! f_IF → matched filter → symbol sampling → data-aided EVM.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::atomic::{self, ProbeProfile};
use crate::config::{AtomicParams, LinkConfig, ReceiverChain};
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::linalg::{cr, CMat, CVec};
use crate::link::budget::{self, BasebandNoise, NoiseInputs};
use crate::link::pulse::Pulse;
use crate::link::qam;
use crate::operating::OperatingPoint;
use crate::response::{self, Realization};
use crate::rk4::MasterEquation;

/// How the atomic stage is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Linear time-invariant model: the 15-pole g_q realization.
    Lti,
    /// Full master-equation trajectory.
    Rk4,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lti" => Ok(Mode::Lti),
            "rk4" => Ok(Mode::Rk4),
            _ => Err(Error::InvalidArgument(format!("unknown mode '{s}' (lti|rk4)"))),
        }
    }
}

/// First-order-hold exact discretization of a realization:
/// x_{k+1} = Φx_k + Γ₁u_k + Γ₂(u_{k+1} − u_k).
#[derive(Clone, Debug)]
pub struct FohModel {
    pub phi: CMat,
    pub gamma1: CMat,
    pub gamma2: CMat,
    pub c: CVec,
    pub gain: f64,
}

impl FohModel {
    pub fn new(real: &Realization, dt: f64) -> Self {
        let n = real.order();
        let m = real.inputs();
        let mut big = CMat::zeros(n + 2 * m, n + 2 * m);
        big.view_mut((0, 0), (n, n)).copy_from(&(&real.a * cr(dt)));
        big.view_mut((0, n), (n, m)).copy_from(&(&real.b * cr(dt)));
        for j in 0..m {
            big[(n + j, n + m + j)] = cr(1.0);
        }
        let e = big.exp();
        Self {
            phi: e.view((0, 0), (n, n)).into_owned(),
            gamma1: e.view((0, n), (n, m)).into_owned(),
            gamma2: e.view((0, n + m), (n, m)).into_owned(),
            c: real.c.clone(),
            gain: real.gain,
        }
    }

    /// Output samples for real input samples `u[k]` (one array per input),
    /// starting from the zero state.
    pub fn simulate(&self, u: &[Vec<f64>]) -> Vec<f64> {
        let n = self.phi.nrows();
        let len = u.first().map_or(0, |v| v.len());
        let mut x = CVec::zeros(n);
        let mut y = Vec::with_capacity(len);
        let mut next = CVec::zeros(n);
        for k in 0..len {
            y.push((self.c.dot(&x) * self.gain).re);
            if k + 1 == len {
                break;
            }
            self.phi.mul_to(&x, &mut next);
            for (j, uj) in u.iter().enumerate() {
                let a = uj[k];
                let d = uj[k + 1] - uj[k];
                for r in 0..n {
                    next[r] += self.gamma1[(r, j)] * a + self.gamma2[(r, j)] * d;
                }
            }
            std::mem::swap(&mut x, &mut next);
        }
        y
    }
}

/// Uniform sample grid t_k = t0 + k·dt.
#[derive(Clone, Copy, Debug)]
pub struct Grid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl Grid {
    pub fn t(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// Photocurrent deviation ΔI(t_k) [A] for an RF envelope E_I + iE_Q [V/m]
/// relative to the LO.
pub fn photocurrent_response<F>(
    p: &AtomicParams,
    profile: &ProbeProfile,
    field: F,
    grid: Grid,
    mode: Mode,
    rk_substeps: usize,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Complex64,
{
    match mode {
        Mode::Lti => {
            let real = response::gq_realization(p, profile);
            let foh = FohModel::new(&real, grid.dt);
            let e: Vec<Complex64> = (0..grid.len).map(|k| field(grid.t(k))).collect();
            let u = vec![e.iter().map(|z| z.re).collect(), e.iter().map(|z| z.im).collect()];
            let l = p.cell_length;
            Ok(foh.simulate(&u).into_iter().map(|g| l * g).collect())
        }
        Mode::Rk4 => {
            if profile.slices.len() != 1 {
                return Err(Error::InvalidArgument(
                    "the master-equation path models a uniform cell (one slice)".into(),
                ));
            }
            let sub = rk_substeps.max(1);
            let me = MasterEquation::new(p)?;
            let rho0 = profile.slices[0].system.steady_rho();
            let scale = p.mu_rf / HBAR;
            let x0 = rho0.to_vec();
            let p_bar = me.probe_power_of(x0.as_slice());
            let amps_per_watt = atomic::mean_photocurrent(p, 1.0);
            let mut out = Vec::with_capacity(grid.len);
            let steps = grid.len.saturating_sub(1) * sub;
            me.integrate(
                &rho0,
                |t| field(t) * scale,
                grid.t0,
                grid.dt / sub as f64,
                steps,
                |k, _t, x| {
                    if k % sub == 0 {
                        out.push(amps_per_watt * (me.probe_power_of(x) - p_bar));
                    }
                },
            )?;
            Ok(out)
        }
    }
}

/// Pulse train Σ_n x(n)·p(t − nT).
#[derive(Clone, Debug)]
pub struct PulseTrain {
    pub symbols: Vec<Complex64>,
    pub pulse: Pulse,
}

impl PulseTrain {
    pub fn eval(&self, t: f64) -> Complex64 {
        let period = self.pulse.period;
        let span = self.pulse.span as f64;
        let lo = ((t / period) - span).ceil().max(0.0) as usize;
        let hi = ((t / period) + span).floor();
        if hi < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let hi = (hi as usize).min(self.symbols.len().saturating_sub(1));
        let mut acc = Complex64::new(0.0, 0.0);
        for n in lo..=hi {
            acc += self.symbols[n] * self.pulse.eval(t - n as f64 * period);
        }
        acc
    }

    /// Grid covering all pulse tails plus `guard` symbols after the last one.
    pub fn grid(&self, samples_per_symbol: usize, guard: usize) -> Grid {
        let period = self.pulse.period;
        let dt = period / samples_per_symbol as f64;
        let span = self.pulse.span;
        let symbols = 2 * span + self.symbols.len() - 1 + guard;
        Grid {
            t0: -(span as f64) * period,
            dt,
            len: symbols * samples_per_symbol + 1,
        }
    }
}

/// Linear convolution via FFT.
fn fft_convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = (a.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa = a.to_vec();
    fa.resize(n, Complex64::new(0.0, 0.0));
    let mut fb = b.to_vec();
    fb.resize(n, Complex64::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y / n as f64;
    }
    inv.process(&mut fa);
    fa.truncate(a.len() + b.len() - 1);
    fa
}

/// Matched-filter output (dt/T)·Σ_j r[j]·p((k − j)dt) on the input grid.
pub fn matched_filter(r: &[Complex64], pulse: &Pulse, dt: f64) -> Vec<Complex64> {
    let h = (pulse.half_width() / dt).round() as usize;
    let taps: Vec<Complex64> = (0..=2 * h)
        .map(|j| cr(pulse.eval((j as f64 - h as f64) * dt) * dt / pulse.period))
        .collect();
    let full = fft_convolve(r, &taps);
    full[h..h + r.len()].to_vec()
}

/// Data-aided least-squares gain and EVM.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EvmFit {
    pub gain: Complex64,
    pub evm: f64,
}

pub fn evm_fit(tx: &[Complex64], rx: &[Complex64]) -> EvmFit {
    let num: Complex64 = tx.iter().zip(rx).map(|(x, z)| x.conj() * z).sum();
    let den: f64 = tx.iter().map(|x| x.norm_sqr()).sum();
    let gain = num / den;
    let err: f64 = tx.iter().zip(rx).map(|(x, z)| (z - gain * x).norm_sqr()).sum();
    let evm = (err / (gain.norm_sqr() * den)).sqrt();
    EvmFit { gain, evm }
}

pub fn snr_from_evm_db(evm: f64) -> f64 {
    -20.0 * evm.log10()
}

/// Options of [`simulate_single_carrier`].
#[derive(Clone, Debug)]
pub struct ScOptions {
    pub mode: Mode,
    pub noise: bool,
    /// Overrides the line-of-sight field amplitude [V/m].
    pub e_sig: Option<f64>,
    /// Keep every n-th sample in the waveform trace; 0 disables traces.
    pub trace_decimation: usize,
    /// Trailing guard after the last pulse tail, in symbols.
    pub guard_symbols: usize,
}

impl Default for ScOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Lti,
            noise: true,
            e_sig: None,
            trace_decimation: 50,
            guard_symbols: 2,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Trace {
    pub t: Vec<f64>,
    pub tx: Vec<Complex64>,
    /// Matched-filter output, delayed by the recovered timing and
    /// equalized by the fitted gain.
    pub rx: Vec<Complex64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingleCarrierResult {
    pub mode: Mode,
    pub noise: bool,
    pub e_sig: f64,
    pub e_sig_over_e_lo: f64,
    pub gq_at_if_abs: f64,
    pub i_ph: f64,
    pub zeta: f64,
    pub p_qref: f64,
    pub p_rx_isotropic_w: f64,
    pub noise_psd: BasebandNoise,
    pub sigma_w2: f64,
    /// Equivalent-baseband SNR P_T|H|²/(P_qref σ_w²) [dB].
    pub snr_model_db: f64,
    pub evm: f64,
    pub snr_db: f64,
    pub evm_noiseless: f64,
    pub snr_noiseless_db: f64,
    /// Equivalent input noise PSD implied by `snr_db` [dBm/Hz].
    pub equivalent_noise_psd_dbm_hz: f64,
    pub timing_s: f64,
    pub gain: Complex64,
    pub peak_baseband: f64,
    pub tx_symbols: Vec<Complex64>,
    /// Equalized symbol-rate samples.
    pub rx_symbols: Vec<Complex64>,
    #[serde(skip)]
    pub trace: Trace,
    pub warnings: Vec<String>,
}

/// Ratio above which the small-signal model is flagged.
pub const SMALL_SIGNAL_WARN: f64 = 0.1;

pub fn simulate_single_carrier(
    p: &AtomicParams,
    chain: &ReceiverChain,
    link: &LinkConfig,
    opts: &ScOptions,
) -> Result<SingleCarrierResult> {
    let mut warnings = Vec::new();
    let op = OperatingPoint::new(p, link.f_if_hz)?;
    let (profile, i_ph, zeta) = (&op.profile, op.i_ph, op.zeta);
    let omega_if = 2.0 * PI * link.f_if_hz;
    let gq_if = op.gq_at_if.norm();

    let e_sig = opts.e_sig.unwrap_or_else(|| budget::los_field_strength(link));
    let ratio = e_sig / p.e_lo;
    if ratio > SMALL_SIGNAL_WARN {
        warnings.push(format!(
            "E_sig/E_LO = {ratio:.3} exceeds {SMALL_SIGNAL_WARN}; the linear model may be inaccurate"
        ));
    }
    if link.f_if_hz > 0.5 / link.sample_step_s / 10.0 {
        warnings.push("f_IF is within a decade of the sample-rate Nyquist limit".into());
    }

    let mut rng = ChaCha20Rng::seed_from_u64(link.seed);
    let symbols = qam::unit_power_frame(link.modulation_order, link.n_symbols, &mut rng)?;
    let train = PulseTrain {
        symbols: symbols.clone(),
        pulse: Pulse::from_config(link),
    };
    let sps = link.samples_per_symbol();
    let grid = train.grid(sps, opts.guard_symbols);

    let field = |t: f64| train.eval(t) * Complex64::from_polar(e_sig, omega_if * t);
    let di = photocurrent_response(p, profile, field, grid, opts.mode, link.rk_substeps())?;

    // TIA and coherent downconversion, normalized to V_ref.
    let tia = chain.r_t * chain.k_c() / link.v_ref_v;
    let r: Vec<Complex64> = di
        .iter()
        .enumerate()
        .map(|(k, &i)| Complex64::from_polar(tia * i, -omega_if * grid.t(k)))
        .collect();
    let z_clean = matched_filter(&r, &train.pulse, grid.dt);

    let noise_psd = budget::baseband_noise_psd(
        chain,
        &NoiseInputs {
            v_ref: link.v_ref_v,
            cell_length: p.cell_length,
            gq_at_if: gq_if,
            zeta,
            e_n_bb: budget::bbr_field_density(p.f_lo(), p.temperature),
            i_ph,
            temperature: p.temperature,
        },
    );
    let z = if opts.noise {
        let mut nrng = ChaCha20Rng::seed_from_u64(link.seed);
        nrng.set_stream(1);
        let sd = (noise_psd.total / grid.dt / 2.0).sqrt();
        let w: Vec<Complex64> = (0..grid.len)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut nrng);
                let b: f64 = StandardNormal.sample(&mut nrng);
                Complex64::new(a * sd, b * sd)
            })
            .collect();
        let zw = matched_filter(&w, &train.pulse, grid.dt);
        z_clean.iter().zip(&zw).map(|(a, b)| a + b).collect()
    } else {
        z_clean.clone()
    };

    // Genie timing: sample delay minimizing the noiseless EVM.
    let origin = (-grid.t0 / grid.dt).round() as isize;
    let offset = (link.timing_offset_s / grid.dt).round() as isize;
    let sample_at = |zs: &[Complex64], d: isize| -> Option<Vec<Complex64>> {
        (0..symbols.len())
            .map(|n| {
                let k = origin + (n * sps) as isize + d;
                (k >= 0 && (k as usize) < zs.len()).then(|| zs[k as usize])
            })
            .collect()
    };
    let mut best: Option<(isize, EvmFit)> = None;
    for d in 0..(2 * sps) as isize {
        if let Some(s) = sample_at(&z_clean, d) {
            let fit = evm_fit(&symbols, &s);
            if best.is_none_or(|(_, b)| fit.evm < b.evm) {
                best = Some((d, fit));
            }
        }
    }
    let (d0, clean_fit) = best.ok_or_else(|| Error::InvalidArgument("frame too short".into()))?;
    let delay = d0 + offset;
    let clean_fit = if offset == 0 {
        clean_fit
    } else {
        evm_fit(&symbols, &sample_at(&z_clean, delay).ok_or_else(|| {
            Error::InvalidArgument("timing offset moves sampling outside the frame".into())
        })?)
    };
    let samples = sample_at(&z, delay).expect("delay checked on the same grid");
    let fit = evm_fit(&symbols, &samples);

    let peak = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak > 1.0 {
        return Err(Error::ClippedAdc {
            peak: peak * link.v_ref_v,
            v_ref: link.v_ref_v,
        });
    }

    let p_qref = budget::qref_power(chain, link.v_ref_v, p.cell_length, gq_if, p.lambda_lo);
    let p_t = budget::dbm_to_w(link.tx_power_dbm);
    let beta = budget::los_path_gain(link, p.lambda_lo);
    let sigma_w2 = noise_psd.variance(link.bandwidth_hz);
    let snr_model = budget::quantum_snr(p_t, beta, p_qref, sigma_w2);
    let snr_db = snr_from_evm_db(fit.evm);

    let trace = if opts.trace_decimation > 0 {
        let mut tr = Trace::default();
        for k in (0..grid.len).step_by(opts.trace_decimation) {
            let kd = k as isize + delay;
            if kd < 0 || kd as usize >= z.len() {
                continue;
            }
            tr.t.push(grid.t(k));
            tr.tx.push(train.eval(grid.t(k)));
            tr.rx.push(z[kd as usize] / fit.gain);
        }
        tr
    } else {
        Trace::default()
    };

    Ok(SingleCarrierResult {
        mode: opts.mode,
        noise: opts.noise,
        e_sig,
        e_sig_over_e_lo: ratio,
        gq_at_if_abs: gq_if,
        i_ph,
        zeta,
        p_qref,
        p_rx_isotropic_w: p_t * beta,
        noise_psd,
        sigma_w2,
        snr_model_db: 10.0 * snr_model.log10(),
        evm: fit.evm,
        snr_db,
        evm_noiseless: clean_fit.evm,
        snr_noiseless_db: snr_from_evm_db(clean_fit.evm),
        equivalent_noise_psd_dbm_hz: budget::equivalent_noise_psd_dbm(
            p_t * beta,
            snr_db,
            link.bandwidth_hz,
        ),
        timing_s: delay as f64 * grid.dt,
        gain: fit.gain,
        peak_baseband: peak,
        rx_symbols: samples.iter().map(|v| v / fit.gain).collect(),
        tx_symbols: symbols,
        trace,
        warnings,
    })
}

/// Excitation used to compare the LTI and master-equation paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Excitation {
    /// Constant-envelope tone at f_IF.
    Tone,
    /// Pulse-shaped QAM frame.
    Qam,
}

#[derive(Clone, Debug)]
pub struct ModeComparison {
    pub t: Vec<f64>,
    pub lti: Vec<f64>,
    pub rk4: Vec<f64>,
    /// Σ(rk4 − lti)²/Σrk4² [dB].
    pub nmse_db: f64,
}

/// Photocurrent from both atomic paths for the same input over `n_symbols`
/// symbol periods (QAM: the frame plus its pulse tails).
pub fn compare_modes(
    p: &AtomicParams,
    link: &LinkConfig,
    e_sig: f64,
    n_symbols: usize,
    excitation: Excitation,
) -> Result<ModeComparison> {
    let profile = atomic::probe_transmission(p, 1)?;
    let omega_if = 2.0 * PI * link.f_if_hz;
    let sps = link.samples_per_symbol();
    let carrier = move |t: f64| Complex64::from_polar(e_sig, omega_if * t);
    let (grid, envelope): (Grid, Box<dyn Fn(f64) -> Complex64>) = match excitation {
        Excitation::Tone => (
            Grid {
                t0: 0.0,
                dt: link.sample_step_s,
                len: n_symbols * sps + 1,
            },
            Box::new(|_| Complex64::new(1.0, 0.0)),
        ),
        Excitation::Qam => {
            let mut rng = ChaCha20Rng::seed_from_u64(link.seed);
            let train = PulseTrain {
                symbols: qam::unit_power_frame(link.modulation_order, n_symbols, &mut rng)?,
                pulse: Pulse::from_config(link),
            };
            (train.grid(sps, 0), Box::new(move |t| train.eval(t)))
        }
    };
    let field = |t: f64| envelope(t) * carrier(t);
    let lti = photocurrent_response(p, &profile, field, grid, Mode::Lti, 1)?;
    let rk4 = photocurrent_response(p, &profile, field, grid, Mode::Rk4, link.rk_substeps())?;
    let err: f64 = lti.iter().zip(&rk4).map(|(a, b)| (a - b).powi(2)).sum();
    let sig: f64 = rk4.iter().map(|b| b * b).sum();
    Ok(ModeComparison {
        t: (0..grid.len).map(|k| grid.t(k)).collect(),
        lti,
        rk4,
        nmse_db: 10.0 * (err / sig).log10(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn foh_reproduces_first_order_step() {
        // dx/dt = −x + u, y = x, unit step from t = 0.
        let real = Realization {
            a: CMat::from_element(1, 1, cr(-1.0)),
            b: CMat::from_element(1, 1, cr(1.0)),
            c: CVec::from_element(1, cr(1.0)),
            gain: 1.0,
        };
        let foh = FohModel::new(&real, 0.1);
        let y = foh.simulate(&[vec![1.0; 21]]);
        assert!((y[20] - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
        // Ramp input is exact under first-order hold.
        let u: Vec<f64> = (0..21).map(|k| 0.1 * k as f64).collect();
        let y = foh.simulate(&[u]);
        let t: f64 = 2.0;
        assert!((y[20] - (t - 1.0 + (-t).exp())).abs() < 1e-12);
    }

    #[test]
    fn matched_filter_delta_recovers_pulse_energy() {
        let pulse = Pulse::new(crate::config::PulseShape::Sinc, 1.0, 8, 0.35);
        let dt = 0.01;
        let n = 2001;
        let r: Vec<Complex64> = (0..n).map(|k| cr(pulse.eval((k as f64 - 1000.0) * dt))).collect();
        let z = matched_filter(&r, &pulse, dt);
        assert!((z[1000].re - 1.0).abs() < 0.02);
        assert!((z[1100] - z[900]).norm() < 1e-12);
    }
}
