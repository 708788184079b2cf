//! Thermal Doppler averaging of steady states and transfer functions.
//!
//! Velocities are measured in units of σ_v: a class with velocity v = xσ_v
//! evolves with C0 + x·Cv, and x is standard normal.

pub mod faddeeva;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::atomic::{self, check_pair, DensityMatrix, LiouvillianSystem, IDX_RHO21, N_LEVELS, RED};
use crate::config::AtomicParams;
use crate::error::{Error, Result};
use crate::linalg::{self, cr, kron, max_abs, CMat, CVec, I};
use crate::quadrature::{self, GaussHermite, Tolerance};

pub use faddeeva::{faddeeva, gaussian_pole_expectation, special_j};

/// Gaussian weight exp(−x²/2)/√(2π).
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Velocity integrals are truncated to |x| ≤ this many standard deviations.
pub const VELOCITY_CUTOFF: f64 = 10.0;

/// How velocity-class integrals are evaluated.
#[derive(Clone, Copy, Debug)]
pub enum VelocityQuadrature {
    /// Fixed Gauss–Hermite rule with the given node count.
    GaussHermite(usize),
    /// Adaptive Gauss–Kronrod on [−10, 10] standard deviations.
    Adaptive { rel_tol: f64 },
}

impl Default for VelocityQuadrature {
    fn default() -> Self {
        VelocityQuadrature::Adaptive { rel_tol: 1e-9 }
    }
}

/// The thermal velocity ensemble used by the Gauss–Hermite path.
#[derive(Clone, Debug)]
pub struct VelocityEnsemble {
    pub sigma_v: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl VelocityEnsemble {
    pub fn new(p: &AtomicParams, n: usize) -> Self {
        let gh = GaussHermite::new(n);
        Self {
            sigma_v: p.sigma_v(),
            nodes: gh.nodes,
            weights: gh.weights,
        }
    }

    /// Physical velocities of the nodes [m/s].
    pub fn velocities(&self) -> Vec<f64> {
        self.nodes.iter().map(|x| x * self.sigma_v).collect()
    }
}

/// A_v = −i k_p σ_v (I⊗D_p − D_p⊗I) + i k_c σ_v (I⊗D_c − D_c⊗I).
pub fn velocity_liouvillian(p: &AtomicParams) -> CMat {
    let sv = p.sigma_v();
    let dp = CMat::from_diagonal(&CVec::from_vec(vec![cr(0.0), cr(-1.0), cr(-1.0), cr(-1.0)]));
    let dc = CMat::from_diagonal(&CVec::from_vec(vec![cr(0.0), cr(0.0), cr(-1.0), cr(-1.0)]));
    let id = CMat::identity(N_LEVELS, N_LEVELS);
    let tp = kron(&id, &dp) - kron(&dp, &id);
    let tc = kron(&id, &dc) - kron(&dc, &id);
    tp * (-I * p.k_p() * sv) + tc * (I * p.k_c() * sv)
}

/// Cv, the lower-right block of Qᵀ·A_v·Q; the other blocks must vanish.
pub fn velocity_liouvillian_reduced(p: &AtomicParams, qc: &CMat) -> Result<CMat> {
    let av = velocity_liouvillian(p);
    let b = qc.transpose() * &av * qc;
    let leak = b
        .row(0)
        .iter()
        .chain(b.column(0).iter())
        .fold(0.0_f64, |m, z| m.max(z.norm()));
    if leak > 1e-12 * max_abs(&av).max(1.0) {
        return Err(Error::BlockLeakage { norm: leak });
    }
    Ok(b.view((1, 1), (RED, RED)).into_owned())
}

/// Steady state of the class with normalized velocity x (v = xσ_v), shifting
/// the probe detuning by −k_p v and the control detuning by `control_sign`·k_c v.
fn class_rho(p: &AtomicParams, x: f64, control_sign: f64) -> Result<CMat> {
    let v = x * p.sigma_v();
    let mut q = p.clone();
    q.delta_p -= p.k_p() * v;
    q.delta_c += control_sign * p.k_c() * v;
    Ok(atomic::build_liouvillian(&q)?.steady_rho().rho)
}

/// Doppler-averaged steady state for counter-propagating beams.
pub fn doppler_static_rho(p: &AtomicParams, quad: VelocityQuadrature) -> Result<DensityMatrix> {
    doppler_static_rho_signed(p, quad, 1.0)
}

/// As [`doppler_static_rho`] with an explicit sign on the control shift
/// (+1 counter-propagating, −1 co-propagating).
pub fn doppler_static_rho_signed(
    p: &AtomicParams,
    quad: VelocityQuadrature,
    control_sign: f64,
) -> Result<DensityMatrix> {
    if p.sigma_v() == 0.0 {
        return Ok(atomic::build_liouvillian(p)?.steady_rho());
    }
    let flat = |x: f64| -> Result<CVec> {
        let rho = class_rho(p, x, control_sign)?;
        Ok(linalg::vec_of(&rho))
    };
    let avg = match quad {
        VelocityQuadrature::GaussHermite(n) => {
            let gh = GaussHermite::new(n);
            let terms: Vec<CVec> = gh.nodes.par_iter().map(|&x| flat(x)).collect::<Result<_>>()?;
            let mut acc = CVec::zeros(N_LEVELS * N_LEVELS);
            for (t, w) in terms.iter().zip(&gh.weights) {
                acc.axpy(cr(*w), t, cr(1.0));
            }
            acc
        }
        VelocityQuadrature::Adaptive { rel_tol } => {
            let f = |x: f64| -> CVec {
                flat(x).map(|v| v * cr(normal_pdf(x))).unwrap_or_else(|_| {
                    CVec::from_element(N_LEVELS * N_LEVELS, Complex64::new(f64::NAN, f64::NAN))
                })
            };
            let r = quadrature::integrate(
                f,
                &velocity_breaks(),
                Tolerance {
                    abs: 1e-13,
                    rel: rel_tol,
                    max_segments: 20_000,
                },
            )?;
            r.value
        }
    };
    if avg.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularSystem {
            context: "velocity-class steady state",
        });
    }
    // Enforce exact Hermiticity removed by roundoff in the weighted sum.
    let m = linalg::unvec(&avg, N_LEVELS);
    Ok(DensityMatrix::new((&m + m.adjoint()) * cr(0.5)))
}

fn velocity_breaks() -> Vec<f64> {
    (-20..=20).map(|k| k as f64 * VELOCITY_CUTOFF / 20.0).collect()
}

/// T_kl(s, x) for one velocity class.
pub fn transfer_velocity_class(
    sys: &LiouvillianSystem,
    f: &CMat,
    s: Complex64,
    x: f64,
) -> Result<Complex64> {
    let gen = &sys.c0 + &sys.cv * cr(x);
    let z_x = linalg::solve(&gen, &(-&sys.w0 * cr(0.5)), "velocity-class steady state")?;
    let mut m = -gen;
    for i in 0..RED {
        m[(i, i)] += s;
    }
    let rhs = f * z_x;
    let y = m.lu().solve(&rhs).ok_or(Error::PoleHit { s })?;
    Ok(sys.output_row(IDX_RHO21).dot(&y))
}

/// Doppler-averaged T_kl(s) by direct quadrature over velocity classes.
pub fn doppler_transfer_numeric(
    sys: &LiouvillianSystem,
    k: usize,
    l: usize,
    s: Complex64,
    quad: VelocityQuadrature,
) -> Result<Complex64> {
    check_pair(k, l)?;
    let f = sys.f_kl(k, l)?;
    match quad {
        VelocityQuadrature::GaussHermite(n) => {
            let a = gauss_hermite_transfer(sys, &f, s, n)?;
            let b = gauss_hermite_transfer(sys, &f, s, 2 * n)?;
            let rel = (a - b).norm() / b.norm().max(f64::MIN_POSITIVE);
            if rel > 1e-4 {
                return Err(Error::NonConvergent(format!(
                    "Gauss-Hermite {n} -> {} nodes changed the result by {rel:.3e}",
                    2 * n
                )));
            }
            Ok(b)
        }
        VelocityQuadrature::Adaptive { rel_tol } => {
            let g = |x: f64| -> Complex64 {
                transfer_velocity_class(sys, &f, s, x)
                    .map(|t| t * normal_pdf(x))
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            };
            let r = quadrature::integrate(
                g,
                &velocity_breaks(),
                Tolerance {
                    abs: 0.0,
                    rel: rel_tol,
                    max_segments: 20_000,
                },
            )?;
            if !r.value.re.is_finite() || !r.value.im.is_finite() {
                return Err(Error::PoleHit { s });
            }
            Ok(r.value)
        }
    }
}

fn gauss_hermite_transfer(
    sys: &LiouvillianSystem,
    f: &CMat,
    s: Complex64,
    n: usize,
) -> Result<Complex64> {
    let gh = GaussHermite::new(n);
    let vals: Vec<Complex64> = gh
        .nodes
        .par_iter()
        .map(|&x| transfer_velocity_class(sys, f, s, x))
        .collect::<Result<_>>()?;
    Ok(vals.iter().zip(&gh.weights).map(|(v, w)| v * *w).sum())
}

/// Eigen-decomposition of (sI − C0)⁻¹·Cv with biorthogonal left vectors.
#[derive(Clone, Debug)]
pub struct EigenPack {
    pub s: Complex64,
    pub values: Vec<Complex64>,
    /// Right eigenvectors as columns.
    pub right: CMat,
    /// Left eigenvectors as rows, `left * right = I`.
    pub left: CMat,
    /// (sI − C0)⁻¹.
    pub resolvent: CMat,
    pub condition: f64,
}

/// Largest tolerated eigenvector condition number.
pub const MAX_EIGEN_CONDITION: f64 = 1e8;

impl EigenPack {
    /// Builds the pack through a rank factorization Cv = L·R so that the
    /// structural zero eigenvalues are exact.
    pub fn new(sys: &LiouvillianSystem, s: Complex64) -> Result<Self> {
        let mut m = -&sys.c0;
        for i in 0..RED {
            m[(i, i)] += s;
        }
        let resolvent = linalg::inverse(&m, "resolvent").map_err(|_| Error::PoleHit { s })?;
        let svd = sys.cv.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let sv = &svd.singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let rank_idx: Vec<usize> = (0..RED).filter(|&i| sv[i] > 1e-12 * smax && smax > 0.0).collect();
        let ker_idx: Vec<usize> = (0..RED).filter(|i| !rank_idx.contains(i)).collect();
        let r = rank_idx.len();

        let mut lf = CMat::zeros(RED, r);
        let mut rf = CMat::zeros(r, RED);
        for (c_idx, &i) in rank_idx.iter().enumerate() {
            lf.set_column(c_idx, &(u.column(i) * cr(sv[i])));
            rf.set_row(c_idx, &v_t.row(i));
        }
        let mut values = Vec::with_capacity(RED);
        let mut right = CMat::zeros(RED, RED);
        if r > 0 {
            let rl = &resolvent * &lf;
            let k = &rf * &rl;
            let eig = linalg::Eigen::new(&k)?;
            let vecs = &rl * &eig.right;
            for j in 0..r {
                let col = vecs.column(j);
                let n = col.norm();
                right.set_column(j, &(col / cr(n.max(f64::MIN_POSITIVE))));
                values.push(eig.values[j]);
            }
        }
        for (c_idx, &i) in ker_idx.iter().enumerate() {
            let col: CVec = v_t.row(i).adjoint();
            right.set_column(r + c_idx, &col);
            values.push(Complex64::new(0.0, 0.0));
        }
        let condition = linalg::condition_number(&right);
        if !(condition <= MAX_EIGEN_CONDITION) {
            return Err(Error::IllConditioned { cond: condition });
        }
        let left = linalg::inverse(&right, "eigenvector matrix")?;
        Ok(Self {
            s,
            values,
            right,
            left,
            resolvent,
            condition,
        })
    }

    /// Relative error of Σ λ_m s_m t_mᵀ against (sI − C0)⁻¹Cv.
    pub fn reconstruction_error(&self, sys: &LiouvillianSystem) -> f64 {
        let target = &self.resolvent * &sys.cv;
        let d = CMat::from_diagonal(&CVec::from_vec(self.values.clone()));
        let rec = &self.right * d * &self.left;
        (rec - &target).norm() / target.norm().max(f64::MIN_POSITIVE)
    }

    pub fn biorthogonality_error(&self) -> f64 {
        max_abs(&(&self.left * &self.right - CMat::identity(RED, RED)))
    }
}

/// Doppler-averaged T_kl(s) from the closed-form Gaussian-pole expansion.
pub fn doppler_transfer_analytic(
    sys: &LiouvillianSystem,
    k: usize,
    l: usize,
    s: Complex64,
) -> Result<Complex64> {
    check_pair(k, l)?;
    let f = sys.f_kl(k, l)?;
    let at_s = EigenPack::new(sys, s)?;
    let at_0 = EigenPack::new(sys, Complex64::new(0.0, 0.0))?;
    analytic_sum(sys, &f, &at_s, &at_0)
}

/// Double sum over (m, n) with precomputed eigen packs.
pub fn analytic_sum(
    sys: &LiouvillianSystem,
    f: &CMat,
    at_s: &EigenPack,
    at_0: &EigenPack,
) -> Result<Complex64> {
    let alpha = &at_0.left * &sys.z_bar;
    let coupling = &at_s.left * &at_s.resolvent * f * &at_0.right;
    let beta = at_s.right.transpose() * sys.output_row(IDX_RHO21);
    let mut total = Complex64::new(0.0, 0.0);
    for m in 0..RED {
        let mut row = Complex64::new(0.0, 0.0);
        for n in 0..RED {
            let e = gaussian_pole_expectation(at_s.values[m], at_0.values[n]);
            row += e * coupling[(m, n)] * alpha[n];
        }
        total += beta[m] * row;
    }
    if !total.re.is_finite() || !total.im.is_finite() {
        return Err(Error::IllConditioned { cond: f64::INFINITY });
    }
    Ok(total)
}

/// Doppler-averaged (G_I, G_Q) from either path.
pub fn doppler_gains(
    sys: &LiouvillianSystem,
    s: Complex64,
    analytic: bool,
    quad: VelocityQuadrature,
) -> Result<(Complex64, Complex64)> {
    let (t43, t34) = if analytic {
        (
            doppler_transfer_analytic(sys, 4, 3, s)?,
            doppler_transfer_analytic(sys, 3, 4, s)?,
        )
    } else {
        (
            doppler_transfer_numeric(sys, 4, 3, s, quad)?,
            doppler_transfer_numeric(sys, 3, 4, s, quad)?,
        )
    };
    Ok(((t43 + t34) * 0.5, I * (t43 - t34) * 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn params() -> AtomicParams {
        Config::cs133_default().atomic_params().unwrap()
    }

    #[test]
    fn velocity_generator_annihilates_identity() {
        let av = velocity_liouvillian(&params());
        let u4 = linalg::vec_of(&CMat::identity(4, 4)) * cr(0.5);
        assert!((&av * &u4).norm() < 1e-14);
        assert!((u4.transpose() * &av).norm() < 1e-14);
    }

    #[test]
    fn zero_temperature_has_no_velocity_coupling() {
        let p = params().with_temperature(0.0);
        assert!(max_abs(&velocity_liouvillian(&p)) == 0.0);
        let sys = atomic::build_liouvillian(&p).unwrap();
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * 1.5e5);
        let a = doppler_transfer_analytic(&sys, 4, 3, s).unwrap();
        let t = crate::response::transfer_t(&sys, 4, 3, s).unwrap();
        assert!((a - t).norm() < 1e-10 * t.norm());
    }

    #[test]
    fn eigen_pack_residuals() {
        let sys = atomic::build_liouvillian(&params()).unwrap();
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * 1.5e5);
        let pack = EigenPack::new(&sys, s).unwrap();
        assert!(pack.reconstruction_error(&sys) < 1e-8);
        assert!(pack.biorthogonality_error() < 1e-9);
        let zeros = pack.values.iter().filter(|v| v.norm() == 0.0).count();
        assert_eq!(zeros, 5);
    }
}
