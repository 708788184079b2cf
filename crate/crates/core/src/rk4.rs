//! Fixed-step classical Runge–Kutta integration of the vectorized master
//! equation with a time-varying signal Rabi frequency.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::atomic::{self, DensityMatrix, DIM};
use crate::config::AtomicParams;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

type M16 = SMatrix<Complex64, DIM, DIM>;
type V16 = SVector<Complex64, DIM>;

/// Default step of 1 ns.
pub const DEFAULT_DT: f64 = 1e-9;
/// Trace drift that aborts the integration.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// Decimated output of an RK4 run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub rho: Vec<DensityMatrix>,
    /// Transmitted probe power for a uniform cell [W].
    pub probe_power: Vec<f64>,
    /// Largest |tr ρ − 1| seen at any step.
    pub max_trace_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.rho.last().expect("trajectory is nonempty")
    }
}

fn to_static(m: &CMat) -> M16 {
    M16::from_fn(|i, j| m[(i, j)])
}

/// Integrator for one parameter set, reusable across runs.
pub struct MasterEquation {
    a0: M16,
    p34: M16,
    p43: M16,
    params: AtomicParams,
    /// Largest |eig(A0)| [rad/s].
    pub spectral_radius: f64,
}

impl MasterEquation {
    pub fn new(p: &AtomicParams) -> Result<Self> {
        p.validate()?;
        let a0 = atomic::generator(p, Complex64::new(0.0, 0.0));
        let spectral_radius = linalg::eigenvalues(&a0)?
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.norm()));
        Ok(Self {
            a0: to_static(&a0),
            p34: to_static(&atomic::perturbation_superop(3, 4)),
            p43: to_static(&atomic::perturbation_superop(4, 3)),
            params: p.clone(),
            spectral_radius,
        })
    }

    /// Stability guard 2/max|eig(A0)| [s].
    pub fn max_step(&self) -> f64 {
        2.0 / self.spectral_radius
    }

    #[inline]
    fn deriv(&self, x: &V16, omega_sig: Complex64) -> V16 {
        // H_34 carries Ω*/2 and H_43 carries Ω/2.
        let mut y = self.a0 * x;
        if omega_sig != Complex64::new(0.0, 0.0) {
            y += (self.p34 * x) * (omega_sig.conj() * 0.5) + (self.p43 * x) * (omega_sig * 0.5);
        }
        y
    }

    fn power(&self, x: &V16) -> f64 {
        let p = &self.params;
        let im21 = x[atomic::IDX_RHO21].im;
        let alpha = -atomic::attenuation_prefactor(p, p.omega_p) * im21;
        p.probe_power_in * (-2.0 * alpha * p.cell_length).exp()
    }

    /// Transmitted probe power of a vectorized state for a uniform cell [W].
    pub fn probe_power_of(&self, x: &[Complex64]) -> f64 {
        self.power(&V16::from_column_slice(x))
    }

    /// Integrates from `rho0` over `steps` steps of `dt`, calling `observe`
    /// with (step index, time, vec ρ) at the start and after every step.
    /// Returns the largest trace drift.
    pub fn integrate<F, O>(
        &self,
        rho0: &DensityMatrix,
        omega_sig: F,
        t0: f64,
        dt: f64,
        steps: usize,
        mut observe: O,
    ) -> Result<f64>
    where
        F: Fn(f64) -> Complex64,
        O: FnMut(usize, f64, &[Complex64]),
    {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument("dt must be positive".into()));
        }
        if dt > self.max_step() {
            return Err(Error::StepTooLarge {
                dt,
                bound: self.max_step(),
            });
        }
        let mut x = V16::from_column_slice(rho0.to_vec().as_slice());
        observe(0, t0, x.as_slice());
        let diag = [0usize, 5, 10, 15];
        let half = dt * 0.5;
        let mut om_start = omega_sig(t0);
        let mut max_drift = 0.0_f64;
        for k in 0..steps {
            let t = t0 + k as f64 * dt;
            let om_mid = omega_sig(t + half);
            let om_end = omega_sig(t + dt);
            let k1 = self.deriv(&x, om_start);
            let k2 = self.deriv(&(x + k1 * Complex64::new(half, 0.0)), om_mid);
            let k3 = self.deriv(&(x + k2 * Complex64::new(half, 0.0)), om_mid);
            let k4 = self.deriv(&(x + k3 * Complex64::new(dt, 0.0)), om_end);
            x += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0);
            om_start = om_end;
            let tr: Complex64 = diag.iter().map(|&i| x[i]).sum();
            let drift = (tr - Complex64::new(1.0, 0.0)).norm();
            max_drift = max_drift.max(drift);
            if drift > TRACE_DRIFT_LIMIT || !drift.is_finite() {
                return Err(Error::UnstableStep { drift });
            }
            observe(k + 1, t + dt, x.as_slice());
        }
        Ok(max_drift)
    }

    /// Integrates and records every `decimation`-th state (the initial and
    /// final states are always recorded).
    pub fn run<F: Fn(f64) -> Complex64>(
        &self,
        rho0: &DensityMatrix,
        omega_sig: F,
        t0: f64,
        dt: f64,
        steps: usize,
        decimation: usize,
    ) -> Result<Trajectory> {
        let decimation = decimation.max(1);
        let cap = steps / decimation + 2;
        let mut out = Trajectory {
            t: Vec::with_capacity(cap),
            rho: Vec::with_capacity(cap),
            probe_power: Vec::with_capacity(cap),
            max_trace_drift: 0.0,
        };
        let drift = self.integrate(rho0, omega_sig, t0, dt, steps, |k, t, x| {
            if k % decimation == 0 || k == steps {
                out.t.push(t);
                out.rho.push(DensityMatrix::from_vec(&linalg::CVec::from_column_slice(x)));
                out.probe_power.push(self.probe_power_of(x));
            }
        })?;
        out.max_trace_drift = drift;
        Ok(out)
    }
}

/// Convenience wrapper: integrate over [t0, t1] with step `dt`.
pub fn rk4_master_solver<F: Fn(f64) -> Complex64>(
    p: &AtomicParams,
    omega_sig: F,
    t_span: (f64, f64),
    dt: f64,
    rho0: &DensityMatrix,
    decimation: usize,
) -> Result<Trajectory> {
    let eq = MasterEquation::new(p)?;
    let steps = ((t_span.1 - t_span.0) / dt).round() as usize;
    eq.run(rho0, omega_sig, t_span.0, dt, steps, decimation)
}
