//! Small-signal transfer functions, quantum transconductance, pole-zero
//! structure, time-domain responses and the frequency-dependent intrinsic gain.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::atomic::{
    self, check_pair, LiouvillianSystem, ProbeProfile, IDX_RHO12, IDX_RHO21, RED,
};
use crate::config::AtomicParams;
use crate::constants::{ELEMENTARY_CHARGE, HBAR};
use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMat, CVec, I};

fn resolvent_apply(c0: &CMat, s: Complex64, rhs: &CVec) -> Result<CVec> {
    let mut m = -c0;
    for i in 0..c0.nrows() {
        m[(i, i)] += s;
    }
    m.lu().solve(rhs).ok_or(Error::PoleHit { s })
}

fn check_not_pole(sys: &LiouvillianSystem, s: Complex64) -> Result<()> {
    for p in &sys.poles {
        if (s - p).norm() <= 1e-9 * p.norm().max(s.norm()).max(1.0) {
            return Err(Error::PoleHit { s });
        }
    }
    Ok(())
}

/// T_kl(s): response of ρ₂₁ to a unit perturbation of H_kl (1-based levels).
pub fn transfer_t(sys: &LiouvillianSystem, k: usize, l: usize, s: Complex64) -> Result<Complex64> {
    check_pair(k, l)?;
    check_not_pole(sys, s)?;
    let f = if (k, l) == (3, 4) {
        sys.f34.clone()
    } else if (k, l) == (4, 3) {
        sys.f43.clone()
    } else {
        sys.f_kl(k, l)?
    };
    let y = resolvent_apply(&sys.c0, s, &(f * &sys.z_bar))?;
    Ok(sys.output_row(IDX_RHO21).dot(&y))
}

/// In-phase/quadrature gains and their real-coefficient splits at s = iω.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gains {
    pub omega: f64,
    pub g_i: Complex64,
    pub g_q: Complex64,
    pub g_i1: Complex64,
    pub g_i2: Complex64,
    pub g_q1: Complex64,
    pub g_q2: Complex64,
}

fn iq(sys: &LiouvillianSystem, s: Complex64) -> Result<(Complex64, Complex64)> {
    let t43 = transfer_t(sys, 4, 3, s)?;
    let t34 = transfer_t(sys, 3, 4, s)?;
    Ok(((t43 + t34) * 0.5, I * (t43 - t34) * 0.5))
}

/// G_I, G_Q at iω and the sampled split G(iω) = G₁(iω) + i·G₂(iω).
pub fn gains_iq(sys: &LiouvillianSystem, omega: f64) -> Result<Gains> {
    let (gi, gq) = iq(sys, Complex64::new(0.0, omega))?;
    let (gi_m, gq_m) = iq(sys, Complex64::new(0.0, -omega))?;
    Ok(Gains {
        omega,
        g_i: gi,
        g_q: gq,
        g_i1: (gi + gi_m.conj()) * 0.5,
        g_i2: (gi - gi_m.conj()) / (2.0 * I),
        g_q1: (gq + gq_m.conj()) * 0.5,
        g_q2: (gq - gq_m.conj()) / (2.0 * I),
    })
}

impl Gains {
    /// |G_I2| over the largest of the other three split components.
    pub fn dominance_ratio(&self) -> f64 {
        let other = self.g_i1.norm().max(self.g_q1.norm()).max(self.g_q2.norm());
        self.g_i2.norm() / other.max(f64::MIN_POSITIVE)
    }
}

/// Single-output state-space model y = Σ_j gain·c·(sI − A)⁻¹·b_j·u_j.
///
/// For the response of Im ρ₂₁ the matrices are complex but the input-output
/// map is real: the perturbation stays Hermitian for real inputs.
#[derive(Clone, Debug)]
pub struct Realization {
    pub a: CMat,
    /// One column per input.
    pub b: CMat,
    pub c: CVec,
    pub gain: f64,
}

impl Realization {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    /// Transfer function from input `j` at complex frequency s.
    pub fn eval(&self, s: Complex64, j: usize) -> Result<Complex64> {
        let y = resolvent_apply(&self.a, s, &self.b.column(j).into_owned())?;
        Ok(self.c.dot(&y) * self.gain)
    }

    /// Restriction to input `j`.
    pub fn single(&self, j: usize) -> Realization {
        Realization {
            a: self.a.clone(),
            b: CMat::from_columns(&[self.b.column(j).into_owned()]),
            c: self.c.clone(),
            gain: self.gain,
        }
    }

    pub fn scaled(&self, k: f64) -> Realization {
        Realization {
            gain: self.gain * k,
            ..self.clone()
        }
    }
}

/// Realization of Im ρ₂₁ driven by (Ω_I, Ω_Q): columns are the G_I2 and
/// G_Q2 channels.
pub fn im_rho21_realization(sys: &LiouvillianSystem) -> Realization {
    let b_i = (&sys.f43 + &sys.f34) * &sys.z_bar * cr(0.5);
    let b_q = (&sys.f43 - &sys.f34) * &sys.z_bar * (I * 0.5);
    let c = (sys.output_row(IDX_RHO21) - sys.output_row(IDX_RHO12)) / (2.0 * I);
    Realization {
        a: sys.c0.clone(),
        b: CMat::from_columns(&[b_i, b_q]),
        c,
        gain: 1.0,
    }
}

/// Per-unit-length factor 2k_pN0μ12²/(ε0ħΩ_p) converting Im Δρ₂₁ into
/// −2Δα [m⁻¹].
fn probe_factor(p: &AtomicParams, omega_p: f64) -> f64 {
    2.0 * atomic::attenuation_prefactor(p, omega_p)
}

/// Transconductance realization averaged over the cell: (1/L)∫g_q dx [S].
///
/// Input 0 is E_I and input 1 is E_Q (both in V/m); the G_Q2 channel is
/// kept so the same model reproduces the full linear response. One slice
/// gives the 15-pole model; N slices give a block-diagonal model of order 15N.
pub fn gq_realization(p: &AtomicParams, profile: &ProbeProfile) -> Realization {
    let i_ph = profile.photocurrent(p);
    let n = profile.slices.len();
    let mut a = CMat::zeros(RED * n, RED * n);
    let mut b = CMat::zeros(RED * n, 2);
    let mut c = CVec::zeros(RED * n);
    for (j, sl) in profile.slices.iter().enumerate() {
        let r = im_rho21_realization(&sl.system);
        let w = probe_factor(p, sl.omega_p) * sl.dx / p.cell_length;
        a.view_mut((j * RED, j * RED), (RED, RED)).copy_from(&r.a);
        b.view_mut((j * RED, 0), (RED, 2)).copy_from(&(&r.b * cr(w)));
        c.rows_mut(j * RED, RED).copy_from(&r.c);
    }
    Realization {
        a,
        b,
        c,
        gain: i_ph * p.mu_rf / HBAR,
    }
}

/// Transconductance samples on a frequency grid.
#[derive(Clone, Debug)]
pub struct Transconductance {
    pub omega: Vec<f64>,
    /// Cell-averaged g_q(iω) [S].
    pub g_q: Vec<Complex64>,
    /// Per-slice g_q(x_j, iω) [S], indexed [slice][frequency].
    pub per_slice: Vec<Vec<Complex64>>,
    pub dc_value: f64,
}

/// g_q(x, iω) = Ī_ph·2k_pN0μ12²/(ε0ħΩ_p(x))·G_I2(x, iω)·μ_RF/ħ.
pub fn quantum_transconductance(
    p: &AtomicParams,
    profile: &ProbeProfile,
    omega: &[f64],
) -> Result<Transconductance> {
    let i_ph = profile.photocurrent(p);
    let per_slice: Vec<Vec<Complex64>> = profile
        .slices
        .par_iter()
        .map(|sl| {
            let k = i_ph * probe_factor(p, sl.omega_p) * p.mu_rf / HBAR;
            omega
                .iter()
                .map(|&w| Ok(gains_iq(&sl.system, w)?.g_i2 * k))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let g_q = (0..omega.len())
        .map(|i| {
            profile
                .slices
                .iter()
                .zip(&per_slice)
                .map(|(sl, g)| g[i] * (sl.dx / p.cell_length))
                .sum()
        })
        .collect();
    let dc_value = gq_realization(p, profile).eval(Complex64::new(0.0, 0.0), 0)?.re;
    Ok(Transconductance {
        omega: omega.to_vec(),
        g_q,
        per_slice,
        dc_value,
    })
}

/// κ(iω) = P̄·∫ 2k_pN0μ12²/(ε0ħΩ_p(x))·G_I2(x, iω) dx [W/Hz].
pub fn intrinsic_gain_kappa(
    p: &AtomicParams,
    profile: &ProbeProfile,
    omega: f64,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for sl in &profile.slices {
        acc += gains_iq(&sl.system, omega)?.g_i2 * (probe_factor(p, sl.omega_p) * sl.dx);
    }
    Ok(acc * profile.p_bar)
}

/// κ via the transconductance: (ħω_p/(q_e η))·(ħ/μ_RF)·∫g_q dx.
pub fn kappa_from_transconductance(p: &AtomicParams, integrated_gq: Complex64) -> Complex64 {
    integrated_gq * (HBAR * p.probe_angular_frequency() / (ELEMENTARY_CHARGE * p.pd_quantum_efficiency))
        * (HBAR / p.mu_rf)
}

/// Spectrum of the photocurrent for a uniform field on a symmetric grid:
/// ΔI(iω) = L·g_q(iω)·[E(iω) + E*(−iω)]/2.
pub fn photocurrent_response(
    omega: &[f64],
    g_q: &[Complex64],
    e_sig: &[Complex64],
    cell_length: f64,
) -> Result<Vec<Complex64>> {
    let n = omega.len();
    if g_q.len() != n || e_sig.len() != n {
        return Err(Error::GridMismatch(format!(
            "grid has {n} points, g_q {}, field {}",
            g_q.len(),
            e_sig.len()
        )));
    }
    let scale = omega.iter().fold(0.0_f64, |m, w| m.max(w.abs())).max(1.0);
    for i in 0..n {
        if (omega[i] + omega[n - 1 - i]).abs() > 1e-9 * scale {
            return Err(Error::GridMismatch(
                "frequency grid must be symmetric about zero".into(),
            ));
        }
    }
    Ok((0..n)
        .map(|i| g_q[i] * cell_length * (e_sig[i] + e_sig[n - 1 - i].conj()) * 0.5)
        .collect())
}

/// Poles, zeros and gain of a single-input realization.
#[derive(Clone, Debug)]
pub struct PoleZero {
    pub poles: Vec<Complex64>,
    pub zeros: Vec<Complex64>,
    /// Leading Markov parameter c·A^{r−1}·b·gain (high-frequency gain).
    pub hf_gain: Complex64,
    pub relative_degree: usize,
    pub dc_gain: f64,
}

impl PoleZero {
    /// Rational reconstruction g(s) = h·Π(s − z)/Π(s − p).
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut v = self.hf_gain;
        let (nz, np) = (self.zeros.len(), self.poles.len());
        for i in 0..np {
            if i < nz {
                v *= (s - self.zeros[i]) / (s - self.poles[i]);
            } else {
                v /= s - self.poles[i];
            }
        }
        v
    }

    /// Largest relative deviation between each pole and the conjugate of
    /// its nearest partner.
    pub fn conjugate_pairing_residual(&self) -> f64 {
        pairing_residual(&self.poles)
    }
}

pub fn pairing_residual(values: &[Complex64]) -> f64 {
    values
        .iter()
        .map(|p| {
            let best = values
                .iter()
                .map(|q| (q - p.conj()).norm())
                .fold(f64::INFINITY, f64::min);
            best / p.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Pole-zero factorization of input `input` of a realization.
///
/// Zeros are the eigenvalues of the zero dynamics: with relative degree r,
/// the closed loop A − b·(cA^r)/(cA^{r−1}b) restricted to the kernel of
/// [c; cA; …; cA^{r−1}].
pub fn pole_zero(real: &Realization, input: usize) -> Result<PoleZero> {
    let n = real.order();
    let a_norm = real.a.norm();
    let a = &real.a / cr(a_norm);
    let b: CVec = real.b.column(input).into_owned();
    let c = real.c.clone();
    let scale = c.norm() * b.norm();
    let mut rows: Vec<CVec> = Vec::new();
    let mut row = c.clone();
    let mut r = 0;
    let mut markov = Complex64::new(0.0, 0.0);
    for k in 1..=n {
        rows.push(row.clone());
        let m = row.dot(&b);
        if m.norm() > 1e-9 * scale {
            r = k;
            markov = m;
            break;
        }
        row = a.transpose() * row;
    }
    if r == 0 {
        return Err(Error::DegenerateRealization { zeros: n, poles: n });
    }
    // row currently holds (c A^{r-1})ᵀ.
    let c_ar: CVec = a.transpose() * &row;
    let obs = CMat::from_fn(r, n, |i, j| rows[i][j]);
    let basis = linalg::null_space(&obs, 1e-10);
    let closed = &a - &b * c_ar.transpose() / markov;
    let zd = basis.adjoint() * closed * &basis;
    let mut zeros: Vec<Complex64> = if zd.nrows() > 0 {
        linalg::eigenvalues(&zd)?.into_iter().map(|z| z * a_norm).collect()
    } else {
        Vec::new()
    };
    if zeros.len() >= n {
        return Err(Error::DegenerateRealization {
            zeros: zeros.len(),
            poles: n,
        });
    }
    let mut poles = linalg::eigenvalues(&real.a)?;
    sort_by_frequency(&mut poles);
    sort_by_frequency(&mut zeros);
    let hf_gain = markov * a_norm.powi(r as i32 - 1) * real.gain;
    let mut pz = PoleZero {
        poles,
        zeros,
        hf_gain,
        relative_degree: r,
        dc_gain: 0.0,
    };
    pz.dc_gain = real.eval(Complex64::new(0.0, 0.0), input)?.re;
    Ok(pz)
}

fn sort_by_frequency(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
}

/// Sampled impulse and step responses with derived rise time.
#[derive(Clone, Debug)]
pub struct TimeResponse {
    pub t: Vec<f64>,
    pub impulse: Vec<f64>,
    pub step: Vec<f64>,
    pub final_value: f64,
    /// 10%–90% rise time of the running-maximum envelope of the step [s].
    pub rise_time: f64,
    /// 0.35/t_r [Hz].
    pub bandwidth_from_rise: f64,
}

/// Impulse response c·e^{At}·b and the exactly integrated step response on
/// a uniform grid starting at 0.
pub fn impulse_step_response(
    real: &Realization,
    input: usize,
    dt: f64,
    n: usize,
) -> Result<TimeResponse> {
    if !(dt > 0.0) || n < 2 {
        return Err(Error::InvalidArgument("time grid needs dt > 0 and >= 2 points".into()));
    }
    let phi = (&real.a * cr(dt)).exp();
    let a_inv = linalg::inverse(&real.a, "state matrix")?;
    let psi = &a_inv * (&phi - CMat::identity(real.order(), real.order()));
    let b: CVec = real.b.column(input).into_owned();
    let mut x = b.clone();
    let mut t = Vec::with_capacity(n);
    let mut imp = Vec::with_capacity(n);
    let mut step = Vec::with_capacity(n);
    let mut acc = 0.0;
    for k in 0..n {
        t.push(k as f64 * dt);
        imp.push((real.c.dot(&x) * real.gain).re);
        step.push(acc);
        acc += (real.c.dot(&(&psi * &x)) * real.gain).re;
        x = &phi * x;
    }
    let final_value = (real.c.dot(&(-(&a_inv * &b))) * real.gain).re;
    let rise_time = rise_time(&t, &step, final_value)?;
    Ok(TimeResponse {
        t,
        impulse: imp,
        step,
        final_value,
        rise_time,
        bandwidth_from_rise: 0.35 / rise_time,
    })
}

/// 10%–90% crossing times of the running maximum of step/final.
pub fn rise_time(t: &[f64], step: &[f64], final_value: f64) -> Result<f64> {
    if final_value == 0.0 {
        return Err(Error::DivisionByZero("step response final value"));
    }
    let mut env = Vec::with_capacity(step.len());
    let mut m = f64::NEG_INFINITY;
    for s in step {
        m = m.max(s / final_value);
        env.push(m);
    }
    let crossing = |level: f64| -> Option<f64> {
        let k = env.iter().position(|&e| e >= level)?;
        if k == 0 {
            return Some(t[0]);
        }
        let frac = (level - env[k - 1]) / (env[k] - env[k - 1]);
        Some(t[k - 1] + frac * (t[k] - t[k - 1]))
    };
    match (crossing(0.1), crossing(0.9)) {
        (Some(a), Some(b)) => Ok(b - a),
        _ => Err(Error::InvalidArgument(
            "time grid too short to reach 90% of the final value".into(),
        )),
    }
}

/// Frequency [Hz] where |g(i2πf)| first falls to |g(0)|/√2, by bisection
/// on a log grid between `f_lo` and `f_hi`.
pub fn bandwidth_3db(real: &Realization, input: usize, f_lo: f64, f_hi: f64) -> Result<f64> {
    let g0 = real.eval(Complex64::new(0.0, 0.0), input)?.norm();
    let target = g0 / std::f64::consts::SQRT_2;
    let mag = |f: f64| -> Result<f64> {
        Ok(real
            .eval(Complex64::new(0.0, 2.0 * std::f64::consts::PI * f), input)?
            .norm())
    };
    let n = 400;
    let ratio = (f_hi / f_lo).powf(1.0 / n as f64);
    let mut f_prev = f_lo;
    for k in 1..=n {
        let f = f_lo * ratio.powi(k);
        if mag(f)? < target {
            let (mut lo, mut hi) = (f_prev, f);
            for _ in 0..60 {
                let mid = (lo * hi).sqrt();
                if mag(mid)? < target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok((lo * hi).sqrt());
        }
        f_prev = f;
    }
    Err(Error::InvalidArgument("no -3 dB crossing inside the search band".into()))
}

/// Default Bode grid: 512 log-spaced points over [1e2, 1e7] Hz.
pub fn default_frequency_grid_hz() -> Vec<f64> {
    log_grid(1e2, 1e7, 512)
}

pub fn log_grid(f_min: f64, f_max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![f_min];
    }
    let (a, b) = (f_min.ln(), f_max.ln());
    (0..points)
        .map(|i| {
            if i == 0 {
                f_min
            } else if i == points - 1 {
                f_max
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn setup() -> (AtomicParams, ProbeProfile) {
        let p = Config::cs133_default().atomic_params().unwrap();
        let prof = atomic::probe_transmission(&p, 1).unwrap();
        (p, prof)
    }

    #[test]
    fn split_rejoins() {
        let (_, prof) = setup();
        let g = gains_iq(&prof.slices[0].system, 2.0 * std::f64::consts::PI * 1.5e5).unwrap();
        assert!((g.g_i1 + I * g.g_i2 - g.g_i).norm() < 1e-12 * g.g_i.norm());
        assert!((g.g_q1 + I * g.g_q2 - g.g_q).norm() < 1e-12 * g.g_q.norm().max(1e-30));
    }

    #[test]
    fn realization_matches_sampled_split() {
        let (_, prof) = setup();
        let sys = &prof.slices[0].system;
        let r = im_rho21_realization(sys);
        for f in [0.0, 1e3, 1.5e5, 2e6] {
            let w = 2.0 * std::f64::consts::PI * f;
            let g = gains_iq(sys, w).unwrap();
            let s = Complex64::new(0.0, w);
            let gi2 = r.eval(s, 0).unwrap();
            let gq2 = r.eval(s, 1).unwrap();
            assert!((gi2 - g.g_i2).norm() < 1e-9 * g.g_i2.norm(), "{f}");
            assert!((gq2 - g.g_q2).norm() < 1e-9 * g.g_i2.norm(), "{f}");
        }
    }

    #[test]
    fn pole_hit_is_reported() {
        let (_, prof) = setup();
        let sys = &prof.slices[0].system;
        let s = sys.poles[0];
        assert!(matches!(transfer_t(sys, 4, 3, s), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn symmetric_grid_required() {
        let w = [-1.0, 0.0, 2.0];
        let z = [Complex64::new(1.0, 0.0); 3];
        assert!(photocurrent_response(&w, &z, &z, 0.02).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e2, 1e7, 512);
        assert_eq!(g.len(), 512);
        assert_eq!(g[0], 1e2);
        assert_eq!(g[511], 1e7);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
