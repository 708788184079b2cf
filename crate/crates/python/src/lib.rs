//! Python bindings: configs, the operating point and the main sweeps.
//!
//! Results that carry many named fields are returned as plain dicts.

use std::f64::consts::PI;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use rydex::link::{self, mimo, Mode, ScOptions};
use rydex::{atomic, doppler, noise, response};

fn err(e: rydex::Error) -> PyErr {
    match e {
        rydex::Error::Config { .. } | rydex::Error::ConfigParse(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn pair(s: &str) -> PyResult<(usize, usize)> {
    match s {
        "43" => Ok((4, 3)),
        "34" => Ok((3, 4)),
        _ => Err(PyValueError::new_err(format!("pair must be '43' or '34', got '{s}'"))),
    }
}

fn jw(f: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * f)
}

/// Validated receiver configuration.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: rydex::Config,
}

#[pymethods]
impl PyConfig {
    /// The committed default, or the JSON file at `path`.
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<std::path::PathBuf>) -> PyResult<Self> {
        let inner = match path {
            Some(p) => rydex::Config::from_path(&p).map_err(err)?,
            None => rydex::Config::cs133_default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: rydex::Config::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Copy with one dotted key replaced, e.g. `set("atomic.temperature_k", 77.0)`.
    fn set(&self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<Self> {
        let new: Value = if let Ok(b) = value.extract::<bool>() {
            Value::from(b)
        } else if let Ok(i) = value.extract::<i64>() {
            Value::from(i)
        } else if let Ok(f) = value.extract::<f64>() {
            Value::from(f)
        } else {
            Value::from(value.extract::<String>()?)
        };
        let mut v = serde_json::to_value(&self.inner).expect("config serializes");
        let mut slot = &mut v;
        for part in key.split('.') {
            slot = slot
                .get_mut(part)
                .ok_or_else(|| PyValueError::new_err(format!("unknown config key '{key}'")))?;
        }
        *slot = new;
        Self::from_json(&v.to_string())
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(T={} K, E_LO={} V/m, f_IF={} Hz)",
            self.inner.atomic.temperature_k, self.inner.atomic.e_lo_v_per_m, self.inner.link.f_if_hz
        )
    }
}

/// Probe profile, photocurrent and g_q realization at one configuration.
#[pyclass(name = "OperatingPoint")]
pub struct PyOperatingPoint {
    cfg: rydex::Config,
    params: rydex::AtomicParams,
    op: rydex::OperatingPoint,
}

#[pymethods]
impl PyOperatingPoint {
    #[new]
    #[pyo3(signature = (config=None, slices=1))]
    fn new(config: Option<PyConfig>, slices: usize) -> PyResult<Self> {
        let cfg = config.map_or_else(rydex::Config::cs133_default, |c| c.inner);
        let params = cfg.atomic_params().map_err(err)?;
        let op = rydex::OperatingPoint::with_slices(&params, cfg.link.f_if_hz, slices).map_err(err)?;
        Ok(Self { cfg, params, op })
    }

    #[getter]
    fn gq_dc(&self) -> f64 {
        self.op.gq_dc
    }

    #[getter]
    fn gq_at_if(&self) -> Complex64 {
        self.op.gq_at_if
    }

    #[getter]
    fn i_ph(&self) -> f64 {
        self.op.i_ph
    }

    #[getter]
    fn transmission(&self) -> f64 {
        self.op.profile.p_bar / self.params.probe_power_in
    }

    #[getter]
    fn ell(&self) -> f64 {
        self.op.ell
    }

    #[getter]
    fn zeta(&self) -> f64 {
        self.op.zeta
    }

    /// g_q(i2πf) [S] at each frequency [Hz].
    fn gq(&self, freqs_hz: Vec<f64>) -> PyResult<Vec<Complex64>> {
        freqs_hz
            .iter()
            .map(|&f| self.op.realization.eval(jw(f), 0).map_err(err))
            .collect()
    }

    /// Poles and zeros of g_q in rad/s.
    fn pole_zero<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let pz = response::pole_zero(&self.op.realization, 0).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("poles", pz.poles)?;
        d.set_item("zeros", pz.zeros)?;
        d.set_item("relative_degree", pz.relative_degree)?;
        d.set_item("dc_gain", pz.dc_gain)?;
        Ok(d)
    }

    #[pyo3(signature = (dt=2e-9, n=20000))]
    fn impulse<'py>(&self, py: Python<'py>, dt: f64, n: usize) -> PyResult<Bound<'py, PyDict>> {
        let r = response::impulse_step_response(&self.op.realization, 0, dt, n).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("t", r.t)?;
        d.set_item("impulse", r.impulse)?;
        d.set_item("step", r.step)?;
        d.set_item("final_value", r.final_value)?;
        d.set_item("rise_time", r.rise_time)?;
        d.set_item("bandwidth_from_rise", r.bandwidth_from_rise)?;
        Ok(d)
    }

    fn noise_budget<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let b = self.op.noise_budget(&self.params, &self.cfg.chain).map_err(err)?;
        to_py(py, &serde_json::to_value(b).expect("budget serializes"))
    }

    /// Noise factors over bias resistors [Ω].
    fn nf_sweep<'py>(&self, py: Python<'py>, r_s: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let pts = self.op.nf_sweep(&self.params, &self.cfg.chain, &r_s).map_err(err)?;
        to_py(py, &serde_json::to_value(pts).expect("sweep serializes"))
    }
}

/// T_kl(i2πf) for stationary atoms.
#[pyfunction]
#[pyo3(signature = (freqs_hz, pair_kl="43", config=None))]
fn transfer(freqs_hz: Vec<f64>, pair_kl: &str, config: Option<PyConfig>) -> PyResult<Vec<Complex64>> {
    let (k, l) = pair(pair_kl)?;
    let cfg = config.map_or_else(rydex::Config::cs133_default, |c| c.inner);
    let sys = atomic::build_liouvillian(&cfg.atomic_params().map_err(err)?).map_err(err)?;
    freqs_hz
        .iter()
        .map(|&f| response::transfer_t(&sys, k, l, jw(f)).map_err(err))
        .collect()
}

/// Thermally averaged T_kl(i2πf); `method` is "analytic" or "numeric".
#[pyfunction]
#[pyo3(signature = (freqs_hz, pair_kl="43", method="analytic", config=None))]
fn doppler_transfer(
    freqs_hz: Vec<f64>,
    pair_kl: &str,
    method: &str,
    config: Option<PyConfig>,
) -> PyResult<Vec<Complex64>> {
    let (k, l) = pair(pair_kl)?;
    let cfg = config.map_or_else(rydex::Config::cs133_default, |c| c.inner);
    let sys = atomic::build_liouvillian(&cfg.atomic_params().map_err(err)?).map_err(err)?;
    freqs_hz
        .iter()
        .map(|&f| {
            match method {
                "analytic" => doppler::doppler_transfer_analytic(&sys, k, l, jw(f)),
                "numeric" => doppler::doppler_transfer_numeric(&sys, k, l, jw(f), Default::default()),
                _ => Err(rydex::Error::InvalidArgument(format!("unknown method '{method}'"))),
            }
            .map_err(err)
        })
        .collect()
}

/// Transmission P/P0 and its slope [m/V] over an E_LO grid [V/m].
#[pyfunction]
#[pyo3(signature = (e_lo, gamma_scale=1.0, config=None))]
fn dc_sweep(e_lo: Vec<f64>, gamma_scale: f64, config: Option<PyConfig>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let cfg = config.map_or_else(rydex::Config::cs133_default, |c| c.inner);
    let pts = atomic::dc_sweep(&cfg.atomic_params().map_err(err)?, &e_lo, gamma_scale).map_err(err)?;
    Ok((pts.iter().map(|p| p.transmission).collect(), pts.iter().map(|p| p.slope).collect()))
}

/// BBR-limited field sensitivity [V·m⁻¹·Hz^−½].
#[pyfunction]
#[pyo3(signature = (nu_hz, temperature_k, zeta=1.0))]
fn sensitivity(nu_hz: f64, temperature_k: f64, zeta: f64) -> f64 {
    noise::sensitivity(nu_hz, temperature_k, zeta)
}

#[pyfunction]
fn coherence_factor(ell: f64) -> PyResult<f64> {
    noise::coherence_factor(ell).map_err(err)
}

/// J(z) = ∫ N(ξ|0,1)/(z − ξ) dξ.
#[pyfunction]
fn special_j(z: Complex64) -> Complex64 {
    doppler::special_j(z)
}

/// Single-carrier link run; returns the summary with tx/rx symbol lists.
#[pyfunction]
#[pyo3(signature = (config=None, mode="lti", noise=true, e_sig=None))]
fn simulate_sc<'py>(
    py: Python<'py>,
    config: Option<PyConfig>,
    mode: &str,
    noise: bool,
    e_sig: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.map_or_else(rydex::Config::cs133_default, |c| c.inner);
    let p = cfg.atomic_params().map_err(err)?;
    let opts = ScOptions {
        mode: mode.parse::<Mode>().map_err(err)?,
        noise,
        e_sig,
        trace_decimation: 0,
        ..ScOptions::default()
    };
    let r = py
        .detach(|| link::simulate_single_carrier(&p, &cfg.chain, &cfg.link, &opts))
        .map_err(err)?;
    let out = to_py(py, &serde_json::to_value(&r).expect("result serializes"))?;
    out.set_item("tx_symbols", r.tx_symbols)?;
    out.set_item("rx_symbols", r.rx_symbols)?;
    Ok(out)
}

/// Monte Carlo MIMO capacity; one dict per (P_T, scheme, receiver).
#[pyfunction]
#[pyo3(signature = (p_t_dbm, trials=None, config=None))]
fn mimo_capacity<'py>(
    py: Python<'py>,
    p_t_dbm: Vec<f64>,
    trials: Option<usize>,
    config: Option<PyConfig>,
) -> PyResult<Bound<'py, PyList>> {
    let cfg = config.map_or_else(rydex::Config::cs133_default, |c| c.inner);
    let setup = mimo::MimoSetup::from_config(&cfg, None).map_err(err)?;
    let trials = trials.unwrap_or(cfg.mimo.trials);
    let res = py
        .detach(|| mimo::mimo_capacity(&setup, &p_t_dbm, trials, cfg.link.seed))
        .map_err(err)?;
    let out = PyList::empty(py);
    for c in &res {
        let d = PyDict::new(py);
        d.set_item("p_t_dbm", c.p_t_dbm)?;
        d.set_item("scheme", c.scheme.name())?;
        d.set_item("receiver", c.receiver.name())?;
        d.set_item("mean", c.mean())?;
        d.set_item("samples", c.samples.clone())?;
        out.append(d)?;
    }
    Ok(out)
}

#[pymodule]
fn pyrydex(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyOperatingPoint>()?;
    m.add_function(wrap_pyfunction!(transfer, m)?)?;
    m.add_function(wrap_pyfunction!(doppler_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(dc_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_factor, m)?)?;
    m.add_function(wrap_pyfunction!(special_j, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_sc, m)?)?;
    m.add_function(wrap_pyfunction!(mimo_capacity, m)?)?;
    Ok(())
}
