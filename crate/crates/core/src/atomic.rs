//! Four-level Hamiltonian, vectorized Lindblad generator, its reduction to
//! the 15-dimensional trace-free state space, steady states and probe
//! transmission.
//!
//! Conventions: levels are 1-based in public APIs (`k`, `l` ∈ 1..=4) and
//! vectorization stacks columns, so ρ_ij (1-based) sits at 0-based index
//! `(i-1) + 4(j-1)`; ρ₂₁ is index 1.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::config::AtomicParams;
use crate::constants::{ELEMENTARY_CHARGE, EPSILON_0, HBAR};
use crate::doppler;
use crate::error::{Error, Result};
use crate::linalg::{self, cr, kron, max_abs, unit, CMat, CVec, RMat, I};

pub const N_LEVELS: usize = 4;
pub const DIM: usize = 16;
pub const RED: usize = 15;

/// 0-based vec index of ρ_kl for 1-based levels.
pub const fn vec_index(k: usize, l: usize) -> usize {
    (k - 1) + N_LEVELS * (l - 1)
}

pub const IDX_RHO21: usize = vec_index(2, 1);
pub const IDX_RHO12: usize = vec_index(1, 2);

/// A 4×4 density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub rho: CMat,
}

/// Violations measured against the density-matrix invariants.
#[derive(Clone, Copy, Debug)]
pub struct DensityDiagnostics {
    pub hermiticity: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl DensityDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.hermiticity < 1e-12 && self.trace_error < 1e-10 && self.min_eigenvalue > -1e-9
    }
}

impl DensityMatrix {
    pub fn new(rho: CMat) -> Self {
        assert_eq!(rho.shape(), (N_LEVELS, N_LEVELS));
        Self { rho }
    }

    pub fn ground() -> Self {
        let mut rho = CMat::zeros(N_LEVELS, N_LEVELS);
        rho[(0, 0)] = cr(1.0);
        Self { rho }
    }

    pub fn from_vec(x: &CVec) -> Self {
        Self::new(linalg::unvec(x, N_LEVELS))
    }

    pub fn to_vec(&self) -> CVec {
        linalg::vec_of(&self.rho)
    }

    /// Entry ρ_kl with 1-based levels.
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.rho[(k - 1, l - 1)]
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn diagnostics(&self) -> DensityDiagnostics {
        let scale = max_abs(&self.rho).max(f64::MIN_POSITIVE);
        let herm = max_abs(&(&self.rho - self.rho.adjoint())) / scale;
        let trace_error = (self.trace() - cr(1.0)).norm();
        let h = (&self.rho + self.rho.adjoint()) * cr(0.5);
        let eig = h.symmetric_eigen();
        let min_eigenvalue = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        DensityDiagnostics {
            hermiticity: herm,
            trace_error,
            min_eigenvalue,
        }
    }
}

/// ħ-normalized Hamiltonian [rad/s] with complex signal Rabi frequency `omega_sig`.
pub fn build_hamiltonian(p: &AtomicParams, omega_sig: Complex64) -> CMat {
    let mut h = CMat::zeros(N_LEVELS, N_LEVELS);
    let olo = p.omega_lo();
    h[(0, 1)] = cr(p.omega_p / 2.0);
    h[(1, 0)] = cr(p.omega_p / 2.0);
    h[(1, 1)] = cr(-p.delta_p);
    h[(1, 2)] = cr(p.omega_c / 2.0);
    h[(2, 1)] = cr(p.omega_c / 2.0);
    h[(2, 2)] = cr(-p.delta_p - p.delta_c);
    h[(2, 3)] = (cr(olo) + omega_sig.conj()) / 2.0;
    h[(3, 2)] = (cr(olo) + omega_sig) / 2.0;
    h[(3, 3)] = cr(-p.delta_p - p.delta_c + p.delta_lo);
    h
}

/// Superoperator of ρ ↦ −i[H, ρ] under column stacking.
pub fn commutator_superop(h: &CMat) -> CMat {
    let id = CMat::identity(N_LEVELS, N_LEVELS);
    (kron(&id, h) - kron(&h.transpose(), &id)) * (-I)
}

/// Dissipative part of the generator: anticommutator with Γ plus repopulation.
pub fn dissipator_superop(p: &AtomicParams) -> CMat {
    let g = p.gamma;
    let gamma_diag = CMat::from_diagonal(&CVec::from_vec(vec![
        cr(g),
        cr(g + p.gamma2),
        cr(g + p.gamma3),
        cr(g + p.gamma4),
    ]));
    let id = CMat::identity(N_LEVELS, N_LEVELS);
    let mut d = (kron(&gamma_diag, &id) + kron(&id, &gamma_diag)) * cr(-0.5);
    let r11 = vec_index(1, 1);
    let r22 = vec_index(2, 2);
    let r33 = vec_index(3, 3);
    let r44 = vec_index(4, 4);
    d[(r11, r11)] += cr(g);
    d[(r11, r22)] += cr(g + p.gamma2);
    d[(r11, r44)] += cr(g + p.gamma4);
    d[(r22, r33)] += cr(p.gamma3);
    d[(r11, r33)] += cr(g);
    d
}

/// Full 16×16 generator A such that d vec(ρ)/dt = A vec(ρ).
pub fn generator(p: &AtomicParams, omega_sig: Complex64) -> CMat {
    commutator_superop(&build_hamiltonian(p, omega_sig)) + dissipator_superop(p)
}

/// ∂A/∂h_kl for a Hamiltonian perturbation h_kl·E_kl (1-based levels).
pub fn perturbation_superop(k: usize, l: usize) -> CMat {
    commutator_superop(&unit(N_LEVELS, k - 1, l - 1))
}

/// Deterministic orthonormal basis whose first column is vec(I₄)/2.
///
/// Columns 2..16 come from two passes of Gram–Schmidt over e₁..e₁₆, skipping
/// vectors whose residual norm falls below 1e-8.
pub fn reduction_basis() -> RMat {
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(DIM);
    let mut u4 = DVector::<f64>::zeros(DIM);
    for k in 1..=N_LEVELS {
        u4[vec_index(k, k)] = 0.5;
    }
    cols.push(u4);
    for k in 0..DIM {
        if cols.len() == DIM {
            break;
        }
        let mut v = DVector::<f64>::zeros(DIM);
        v[k] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&v);
                v.axpy(-proj, c, 1.0);
            }
        }
        let n = v.norm();
        if n < 1e-8 {
            continue;
        }
        cols.push(v / n);
    }
    RMat::from_columns(&cols)
}

/// Lower-right 15×15 block of Qᵀ·M·Q.
fn reduce_block(q: &CMat, m: &CMat) -> CMat {
    let b = q.transpose() * m * q;
    b.view((1, 1), (RED, RED)).into_owned()
}

/// The vectorized evolution in both the full and reduced coordinates.
#[derive(Clone, Debug)]
pub struct LiouvillianSystem {
    pub a0: CMat,
    pub q: RMat,
    /// Complex copy of `q`, kept to avoid repeated conversions.
    pub qc: CMat,
    pub c0: CMat,
    pub w0: CVec,
    /// Velocity coupling, scaled so `C0 + (v/σ_v)·Cv` is the class-v generator.
    pub cv: CMat,
    pub f34: CMat,
    pub f43: CMat,
    /// Steady-state reduced coordinates z̄0.
    pub z_bar: CVec,
    /// Eigenvalues of C0.
    pub poles: Vec<Complex64>,
}

impl LiouvillianSystem {
    /// Signal-action matrix F_kl (1-based levels, k ≠ l).
    pub fn f_kl(&self, k: usize, l: usize) -> Result<CMat> {
        check_pair(k, l)?;
        Ok(reduce_block(&self.qc, &perturbation_superop(k, l)))
    }

    /// Row of Q·[0; I₁₅] that extracts vec index `idx` from the reduced state.
    pub fn output_row(&self, idx: usize) -> CVec {
        CVec::from_iterator(RED, (0..RED).map(|j| self.qc[(idx, j + 1)]))
    }

    /// Maps reduced coordinates back to the full vec(ρ).
    pub fn expand(&self, z: &CVec) -> CVec {
        let mut x = CVec::zeros(DIM);
        x[0] = cr(0.5);
        x.rows_mut(1, RED).copy_from(z);
        &self.qc * x
    }

    pub fn steady_rho(&self) -> DensityMatrix {
        DensityMatrix::from_vec(&self.expand(&self.z_bar))
    }

}

pub(crate) fn check_pair(k: usize, l: usize) -> Result<()> {
    if !(1..=N_LEVELS).contains(&k) || !(1..=N_LEVELS).contains(&l) || k == l {
        return Err(Error::InvalidArgument(format!(
            "level pair ({k},{l}) must be distinct levels in 1..=4"
        )));
    }
    Ok(())
}

/// Assembles A0, the reduction basis, C0, w0, Cv, F34, F43 and z̄0.
pub fn build_liouvillian(p: &AtomicParams) -> Result<LiouvillianSystem> {
    p.validate()?;
    let a0 = generator(p, Complex64::new(0.0, 0.0));
    let q = reduction_basis();
    let qc = linalg::to_complex(&q);
    let b0 = qc.transpose() * &a0 * &qc;
    let row0 = b0.row(0).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if row0 > 1e-12 * max_abs(&a0) {
        return Err(Error::Reduction { residual: row0 });
    }
    let c0 = b0.view((1, 1), (RED, RED)).into_owned();
    let w0 = b0.view((1, 0), (RED, 1)).column(0).into_owned();
    let cv = doppler::velocity_liouvillian_reduced(p, &qc)?;
    let f34 = reduce_block(&qc, &perturbation_superop(3, 4));
    let f43 = reduce_block(&qc, &perturbation_superop(4, 3));
    let z_bar = linalg::solve(&c0, &(-&w0 * cr(0.5)), "steady state")?;
    let poles = linalg::eigenvalues(&c0)?;
    Ok(LiouvillianSystem {
        a0,
        q,
        qc,
        c0,
        w0,
        cv,
        f34,
        f43,
        z_bar,
        poles,
    })
}

/// Steady state z̄0 and ρ̄ for a system.
pub fn steady_state(sys: &LiouvillianSystem) -> (CVec, DensityMatrix) {
    (sys.z_bar.clone(), sys.steady_rho())
}

/// Prefactor k_p·N0·μ12²/(ε0·ħ·Ω_p) of the attenuation exponent [m⁻¹].
pub fn attenuation_prefactor(p: &AtomicParams, omega_p: f64) -> f64 {
    p.k_p() * p.n0 * p.mu12 * p.mu12 / (EPSILON_0 * HBAR * omega_p)
}

/// Amplitude attenuation exponent α [m⁻¹] for a given ρ and local Ω_p.
pub fn attenuation(rho: &DensityMatrix, p: &AtomicParams, omega_p: f64) -> f64 {
    -attenuation_prefactor(p, omega_p) * rho.get(2, 1).im
}

/// One longitudinal slice of the cell.
#[derive(Clone, Debug)]
pub struct Slice {
    pub x_start: f64,
    pub dx: f64,
    pub omega_p: f64,
    pub alpha: f64,
    pub system: LiouvillianSystem,
}

/// Steady probe transmission through the cell.
#[derive(Clone, Debug)]
pub struct ProbeProfile {
    pub p_bar: f64,
    pub slices: Vec<Slice>,
}

impl ProbeProfile {
    pub fn alpha_profile(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.alpha).collect()
    }

    /// Mean photocurrent Ī_ph = q_e·η·P̄/(ħω_p) [A].
    pub fn photocurrent(&self, p: &AtomicParams) -> f64 {
        mean_photocurrent(p, self.p_bar)
    }
}

pub fn mean_photocurrent(p: &AtomicParams, p_bar: f64) -> f64 {
    ELEMENTARY_CHARGE * p.pd_quantum_efficiency * p_bar / (HBAR * p.probe_angular_frequency())
}

/// Transmitted probe power with `slices` longitudinal slices.
///
/// With one slice the whole cell sees the incident Ω_p. With more, the
/// probe Rabi frequency entering slice j is Ω_p·exp(−Σ_{i<j} α_i Δx) and each
/// slice uses its own steady state.
pub fn probe_transmission(p: &AtomicParams, slices: usize) -> Result<ProbeProfile> {
    if slices == 0 {
        return Err(Error::InvalidArgument("slices must be >= 1".into()));
    }
    let dx = p.cell_length / slices as f64;
    let mut optical_depth = 0.0_f64;
    let mut out = Vec::with_capacity(slices);
    for j in 0..slices {
        let omega_p = p.omega_p * (-optical_depth).exp();
        let local = p.with_omega_p(omega_p);
        let system = build_liouvillian(&local)?;
        let alpha = attenuation(&system.steady_rho(), p, omega_p);
        optical_depth += alpha * dx;
        out.push(Slice {
            x_start: j as f64 * dx,
            dx,
            omega_p,
            alpha,
            system,
        });
    }
    Ok(ProbeProfile {
        p_bar: p.probe_power_in * (-2.0 * optical_depth).exp(),
        slices: out,
    })
}

/// One point of a DC transmission sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DcPoint {
    pub e_lo: f64,
    pub transmission: f64,
    pub slope: f64,
}

/// P̄/P0 over an E_LO grid and its finite-difference derivative [m/V].
///
/// `gamma_scale` multiplies γ3 and γ4 together.
pub fn dc_sweep(p: &AtomicParams, e_lo_grid: &[f64], gamma_scale: f64) -> Result<Vec<DcPoint>> {
    use rayon::prelude::*;
    if e_lo_grid.len() < 3 {
        return Err(Error::GridTooCoarse {
            need: 3,
            got: e_lo_grid.len(),
        });
    }
    if e_lo_grid.windows(2).any(|w| !(w[1] > w[0])) || e_lo_grid[0] <= 0.0 {
        return Err(Error::InvalidArgument(
            "E_LO grid must be positive and strictly increasing".into(),
        ));
    }
    if !(gamma_scale > 0.0 && gamma_scale.is_finite()) {
        return Err(Error::InvalidArgument("gamma_scale must be > 0".into()));
    }
    let mut base = p.clone();
    base.gamma3 *= gamma_scale;
    base.gamma4 *= gamma_scale;
    let t: Vec<f64> = e_lo_grid
        .par_iter()
        .map(|&e| Ok(probe_transmission(&base.with_e_lo(e), 1)?.p_bar / base.probe_power_in))
        .collect::<Result<_>>()?;
    let n = t.len();
    let e = e_lo_grid;
    Ok((0..n)
        .map(|i| {
            let slope = if i == 0 {
                (t[1] - t[0]) / (e[1] - e[0])
            } else if i == n - 1 {
                (t[n - 1] - t[n - 2]) / (e[n - 1] - e[n - 2])
            } else {
                // Nonuniform three-point central difference.
                let h0 = e[i] - e[i - 1];
                let h1 = e[i + 1] - e[i];
                (t[i + 1] * h0 * h0 - t[i - 1] * h1 * h1 + t[i] * (h1 * h1 - h0 * h0))
                    / (h0 * h1 * (h0 + h1))
            };
            DcPoint {
                e_lo: e[i],
                transmission: t[i],
                slope,
            }
        })
        .collect())
}

/// Slope-based intrinsic gain κ = (ħ/μ_RF)·∂P̄/∂E_LO [W/Hz] by central
/// difference with relative step 1e-4, using `slices` cell slices.
pub fn kappa_from_slope(p: &AtomicParams, slices: usize) -> Result<f64> {
    let h = 1e-4 * p.e_lo;
    let up = probe_transmission(&p.with_e_lo(p.e_lo + h), slices)?.p_bar;
    let dn = probe_transmission(&p.with_e_lo(p.e_lo - h), slices)?.p_bar;
    Ok(HBAR / p.mu_rf * (up - dn) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn params() -> AtomicParams {
        Config::cs133_default().atomic_params().unwrap()
    }

    #[test]
    fn vec_indices_match_column_stacking() {
        assert_eq!(vec_index(1, 1), 0);
        assert_eq!(vec_index(2, 1), 1);
        assert_eq!(vec_index(2, 2), 5);
        assert_eq!(vec_index(3, 3), 10);
        assert_eq!(vec_index(4, 4), 15);
        let mut m = CMat::zeros(4, 4);
        m[(1, 0)] = cr(7.0);
        assert_eq!(linalg::vec_of(&m)[IDX_RHO21], cr(7.0));
    }

    #[test]
    fn hamiltonian_entries() {
        let p = params();
        let h = build_hamiltonian(&p, Complex64::new(0.0, 0.0));
        assert_eq!(h[(0, 1)].re, p.omega_p / 2.0);
        assert!((h[(0, 1)].re - std::f64::consts::PI * 8.08e6).abs() < 1e-6);
        assert!((h.adjoint() - &h).norm() == 0.0);
        let hs = build_hamiltonian(&p, Complex64::new(1.0, 2.0));
        assert_eq!(hs[(2, 3)], Complex64::new((p.omega_lo() + 1.0) / 2.0, -1.0));
        assert_eq!(hs[(3, 2)], Complex64::new((p.omega_lo() + 1.0) / 2.0, 1.0));
    }

    #[test]
    fn generator_preserves_trace() {
        let p = params();
        let a0 = generator(&p, Complex64::new(0.0, 0.0));
        let u4 = linalg::vec_of(&CMat::identity(4, 4)) * cr(0.5);
        let res = (u4.transpose() * &a0).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        assert!(res < 1e-12 * max_abs(&a0), "{res}");
    }

    #[test]
    fn basis_is_orthonormal() {
        let q = reduction_basis();
        let e = q.transpose() * &q - RMat::identity(DIM, DIM);
        assert!(e.amax() < 1e-12);
        assert_eq!(q[(vec_index(1, 1), 0)], 0.5);
    }

    #[test]
    fn unitary_limit_is_anti_hermitian() {
        let mut p = params();
        for g in [&mut p.gamma, &mut p.gamma2, &mut p.gamma3, &mut p.gamma4] {
            *g = 0.0;
        }
        let a = generator(&p, Complex64::new(0.0, 0.0));
        assert!(max_abs(&(&a + a.adjoint())) < 1e-6);
    }

    #[test]
    fn steady_state_is_physical() {
        let sys = build_liouvillian(&params()).unwrap();
        let rho = sys.steady_rho();
        let d = rho.diagnostics();
        assert!(d.is_valid(), "{d:?}");
        let res = (&sys.a0 * rho.to_vec()).norm();
        assert!(res < 1e-10 * sys.a0.norm());
        assert!(sys.poles.iter().all(|z| z.re < 0.0));
        assert!(rho.get(2, 1).im < 0.0);
    }

    #[test]
    fn reconstruction_is_exact() {
        let sys = build_liouvillian(&params()).unwrap();
        let b = sys.qc.transpose() * &sys.a0 * &sys.qc;
        let back = &sys.qc * b * sys.qc.transpose();
        assert!(max_abs(&(back - &sys.a0)) < 1e-12 * max_abs(&sys.a0));
    }

    #[test]
    fn signal_action_annihilates_identity() {
        let u4 = linalg::vec_of(&CMat::identity(4, 4)) * cr(0.5);
        for (k, l) in [(3, 4), (4, 3), (1, 2), (2, 3)] {
            let a1 = perturbation_superop(k, l);
            assert!((&a1 * &u4).norm() < 1e-14);
            assert!((u4.transpose() * &a1).norm() < 1e-14);
        }
    }

    #[test]
    fn dark_state_is_ground() {
        let mut p = params();
        p.omega_p = 1e-9;
        p.omega_c = 1e-9;
        p.e_lo = 1e-18;
        let rho = build_liouvillian(&p).unwrap().steady_rho();
        assert!((rho.get(1, 1) - cr(1.0)).norm() < 1e-9);
    }

    #[test]
    fn transparent_medium_keeps_power() {
        let p = params();
        let mut rho = DensityMatrix::ground();
        rho.rho[(1, 0)] = Complex64::new(0.1, 0.0);
        assert_eq!(attenuation(&rho, &p, p.omega_p), 0.0);
        let prof = probe_transmission(&p, 1).unwrap();
        assert!(prof.p_bar < p.probe_power_in);
    }

    #[test]
    fn dc_sweep_rejects_short_grid() {
        assert!(matches!(
            dc_sweep(&params(), &[0.01, 0.02], 1.0),
            Err(Error::GridTooCoarse { .. })
        ));
    }
}
