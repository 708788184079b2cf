//! Subcommand arguments and their computations.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use rydex::atomic;
use rydex::doppler::{self, VelocityQuadrature};
use rydex::io::{Cell, Table};
use rydex::link::{self, budget, mimo, Mode, ScOptions};
use rydex::noise::{self, to_db};
use rydex::response::{self, log_grid};
use rydex::{AtomicParams, Config, Error, OperatingPoint, Result};

use crate::output::Report;
use crate::{Command, Common};

#[derive(Args, Debug, Serialize)]
pub struct SteadyArgs {
    /// Longitudinal cell slices for the probe profile.
    #[arg(long, default_value_t = 1)]
    pub slices: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct DcSweepArgs {
    /// Lowest E_LO [V/m].
    #[arg(long, default_value_t = 1e-3)]
    pub emin: f64,
    /// Highest E_LO [V/m].
    #[arg(long, default_value_t = 0.2)]
    pub emax: f64,
    /// Multiplies γ3 and γ4.
    #[arg(long, default_value_t = 1.0)]
    pub gamma_scale: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct TfArgs {
    /// Perturbed element kl of the Hamiltonian: 43 or 34.
    #[arg(long, default_value = "43")]
    pub pair: String,
}

#[derive(Args, Debug, Serialize)]
pub struct GqArgs {
    #[arg(long, default_value_t = 1)]
    pub slices: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ImpulseArgs {
    /// Time step [s].
    #[arg(long, default_value_t = 2e-9)]
    pub dt: f64,
    /// Number of samples.
    #[arg(long, default_value_t = 20000)]
    pub n: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DopplerMethod {
    Both,
    Numeric,
    Analytic,
}

#[derive(Args, Debug, Serialize)]
pub struct DopplerArgs {
    #[arg(long, default_value = "43")]
    pub pair: String,
    #[arg(long, value_enum, default_value = "both")]
    pub method: DopplerMethod,
}

#[derive(Args, Debug, Serialize)]
pub struct NfSweepArgs {
    /// Lowest R_s [Ω].
    #[arg(long, default_value_t = 100.0)]
    pub rmin: f64,
    /// Highest R_s [Ω].
    #[arg(long, default_value_t = 1e5)]
    pub rmax: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct SensitivityArgs {
    /// BBR coherence factor.
    #[arg(long, default_value_t = 1.0)]
    pub zeta: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ZetaArgs {
    /// Normalized cell length L·ν/c (default: from the config).
    #[arg(long)]
    pub ell: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Lti,
    Rk4,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "lti")]
    pub mode: ModeArg,
    /// Disable additive baseband noise.
    #[arg(long)]
    pub no_noise: bool,
    /// Field amplitude at the cell [V/m] instead of the line-of-sight value.
    #[arg(long)]
    pub e_sig: Option<f64>,
    /// Keep every n-th sample in the waveform table.
    #[arg(long, default_value_t = 50)]
    pub decimate: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct MimoArgs {
    /// Monte Carlo trials (default: mimo.trials).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Lowest transmit power [dBm].
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pub pmin: f64,
    /// Highest transmit power [dBm].
    #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
    pub pmax: f64,
    /// Power step [dB].
    #[arg(long, default_value_t = 5.0)]
    pub pstep: f64,
    /// Coupling matrix CSV (re,im pairs per cell) replacing the dipole model.
    #[arg(long)]
    pub coupling: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    match s {
        "43" => Ok((4, 3)),
        "34" => Ok((3, 4)),
        _ => Err(bad(format!("--pair must be 43 or 34, got '{s}'"))),
    }
}

fn freq_grid(common: &Common, fmin: f64, fmax: f64, points: usize) -> Result<Vec<f64>> {
    let (a, b) = (common.fmin.unwrap_or(fmin), common.fmax.unwrap_or(fmax));
    let n = common.points.unwrap_or(points);
    if !(a > 0.0 && b > a && n >= 1) {
        return Err(bad("frequency grid needs 0 < fmin < fmax and points >= 1"));
    }
    Ok(log_grid(a, b, n))
}

fn bode_row(f: f64, g: Complex64) -> Vec<Cell> {
    vec![
        f.into(),
        g.re.into(),
        g.im.into(),
        (20.0 * g.norm().log10()).into(),
        g.arg().to_degrees().into(),
    ]
}

const BODE: [&str; 5] = ["freq_hz", "re", "im", "mag_db", "phase_deg"];

fn jw(f: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * f)
}

fn cplx(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn run(cmd: &Command, common: &Common, cfg: &Config) -> Result<Report> {
    let p = cfg.atomic_params()?;
    match cmd {
        Command::Steady(a) => steady(&p, a),
        Command::Dcsweep(a) => dcsweep(&p, common, a),
        Command::Tf(a) => tf(&p, common, a),
        Command::Gq(a) => gq(&p, cfg, common, a),
        Command::Impulse(a) => impulse(&p, cfg, a),
        Command::Pz => pz(&p, cfg),
        Command::DopplerTf(a) => doppler_tf(&p, common, a),
        Command::Noise => noise_cmd(&p, cfg),
        Command::NfSweep(a) => nf_sweep(&p, cfg, common, a),
        Command::Sensitivity(a) => sensitivity(&p, a),
        Command::Zeta(a) => zeta(&p, a),
        Command::SimulateSc(a) => simulate(&p, cfg, a),
        Command::MimoCapacity(a) => mimo_cmd(cfg, a),
    }
}

fn steady(p: &AtomicParams, a: &SteadyArgs) -> Result<Report> {
    let profile = atomic::probe_transmission(p, a.slices)?;
    let rho = profile.slices[0].system.steady_rho();
    let mut t = Table::new(&["row", "col", "re", "im"]);
    for i in 0..4 {
        for j in 0..4 {
            let z = rho.rho[(i, j)];
            t.push(vec![(i + 1).into(), (j + 1).into(), z.re.into(), z.im.into()]);
        }
    }
    let d = rho.diagnostics();
    let populations: Vec<f64> = (0..4).map(|i| rho.rho[(i, i)].re).collect();
    let summary = json!({
        "populations": populations,
        "rho21": cplx(rho.get(2, 1)),
        "p_bar_w": profile.p_bar,
        "transmission": profile.p_bar / p.probe_power_in,
        "i_ph_a": profile.photocurrent(p),
        "alpha_per_m": profile.alpha_profile(),
        "diagnostics": {
            "hermiticity": d.hermiticity,
            "trace_error": d.trace_error,
            "min_eigenvalue": d.min_eigenvalue,
            "valid": d.is_valid(),
        },
    });
    Ok(Report::summary(summary).with_table(
        "steady_rho",
        t,
        &["entrance-slice density matrix; row/col are level indices 1..4"],
    ))
}

fn dcsweep(p: &AtomicParams, common: &Common, a: &DcSweepArgs) -> Result<Report> {
    let n = common.points.unwrap_or(101);
    if n < 3 || !(a.emin > 0.0 && a.emax > a.emin) {
        return Err(bad("dcsweep needs 0 < emin < emax and >= 3 points"));
    }
    let grid: Vec<f64> = (0..n)
        .map(|i| a.emin + (a.emax - a.emin) * i as f64 / (n - 1) as f64)
        .collect();
    let pts = atomic::dc_sweep(p, &grid, a.gamma_scale)?;
    let mut t = Table::new(&["e_lo_v_per_m", "transmission", "slope_m_per_v"]);
    for d in &pts {
        t.push_f64(&[d.e_lo, d.transmission, d.slope]);
    }
    let profile = atomic::probe_transmission(p, 1)?;
    let kappa_tf = response::intrinsic_gain_kappa(p, &profile, 0.0)?;
    let summary = json!({
        "e_lo_v_per_m": p.e_lo,
        "gamma_scale": a.gamma_scale,
        "kappa_slope_w_per_hz": atomic::kappa_from_slope(p, 1)?,
        "kappa_tf_w_per_hz": kappa_tf.re,
    });
    Ok(Report::summary(summary).with_table("dcsweep", t, &["transmission is P/P0"]))
}

fn tf(p: &AtomicParams, common: &Common, a: &TfArgs) -> Result<Report> {
    let (k, l) = parse_pair(&a.pair)?;
    let sys = atomic::build_liouvillian(p)?;
    let f = freq_grid(common, 1e2, 1e7, 512)?;
    let vals: Vec<Complex64> = f
        .par_iter()
        .map(|&f| response::transfer_t(&sys, k, l, jw(f)))
        .collect::<Result<_>>()?;
    let mut t = Table::new(&BODE);
    for (f, g) in f.iter().zip(&vals) {
        t.push(bode_row(*f, *g));
    }
    let summary = json!({
        "pair": a.pair,
        "dc": cplx(response::transfer_t(&sys, k, l, Complex64::new(0.0, 0.0))?),
        "points": f.len(),
    });
    Ok(Report::summary(summary).with_table(
        &format!("tf_{}", a.pair),
        t,
        &["T_kl in s: response of rho21 per unit Rabi frequency [rad/s]"],
    ))
}

fn gq(p: &AtomicParams, cfg: &Config, common: &Common, a: &GqArgs) -> Result<Report> {
    let op = OperatingPoint::with_slices(p, cfg.link.f_if_hz, a.slices)?;
    let f = freq_grid(common, 1e2, 1e7, 512)?;
    let vals: Vec<Complex64> = f
        .par_iter()
        .map(|&f| op.realization.eval(jw(f), 0))
        .collect::<Result<_>>()?;
    let mut t = Table::new(&BODE);
    for (f, g) in f.iter().zip(&vals) {
        t.push(bode_row(*f, *g));
    }
    let summary = json!({
        "slices": a.slices,
        "gq_dc_s": op.gq_dc,
        "f_if_hz": op.f_if_hz,
        "gq_at_if_s": cplx(op.gq_at_if),
        "gq_at_if_abs_s": op.gq_at_if.norm(),
        "i_ph_a": op.i_ph,
    });
    Ok(Report::summary(summary).with_table("gq", t, &["g_q in S (A per V/m); mag_db is 20log10|g_q/1 S|"]))
}

fn impulse(p: &AtomicParams, cfg: &Config, a: &ImpulseArgs) -> Result<Report> {
    let op = OperatingPoint::new(p, cfg.link.f_if_hz)?;
    let r = response::impulse_step_response(&op.realization, 0, a.dt, a.n)?;
    let mut t = Table::new(&["t_s", "impulse_s_per_s", "step_s"]);
    for i in 0..r.t.len() {
        t.push_f64(&[r.t[i], r.impulse[i], r.step[i]]);
    }
    let bw = response::bandwidth_3db(&op.realization, 0, 1e2, 1e9)?;
    let summary = json!({
        "final_value_s": r.final_value,
        "rise_time_s": r.rise_time,
        "bandwidth_from_rise_hz": r.bandwidth_from_rise,
        "bandwidth_3db_hz": bw,
    });
    Ok(Report::summary(summary).with_table("impulse", t, &["response of g_q to a unit field impulse/step"]))
}

fn pz(p: &AtomicParams, cfg: &Config) -> Result<Report> {
    let op = OperatingPoint::new(p, cfg.link.f_if_hz)?;
    let pz = response::pole_zero(&op.realization, 0)?;
    let mut t = Table::new(&["kind", "re_hz", "im_hz"]);
    for (kind, set) in [("pole", &pz.poles), ("zero", &pz.zeros)] {
        for z in set.iter() {
            t.push(vec![kind.into(), (z.re / (2.0 * PI)).into(), (z.im / (2.0 * PI)).into()]);
        }
    }
    let summary = json!({
        "poles": pz.poles.len(),
        "zeros": pz.zeros.len(),
        "relative_degree": pz.relative_degree,
        "dc_gain_s": pz.dc_gain,
        "hf_gain": cplx(pz.hf_gain),
        "pole_pairing_residual": pz.conjugate_pairing_residual(),
    });
    Ok(Report::summary(summary).with_table("pz", t, &["roots of g_q divided by 2*pi"]))
}

fn doppler_tf(p: &AtomicParams, common: &Common, a: &DopplerArgs) -> Result<Report> {
    let (k, l) = parse_pair(&a.pair)?;
    let sys = atomic::build_liouvillian(p)?;
    let f = freq_grid(common, 1e2, 1e7, 64)?;
    let mut methods = Vec::new();
    if a.method != DopplerMethod::Analytic {
        methods.push("numeric");
    }
    if a.method != DopplerMethod::Numeric {
        methods.push("analytic");
    }
    let mut t = Table::new(&["freq_hz", "method", "re", "im", "mag_db", "phase_deg"]);
    let mut summary = serde_json::Map::new();
    for m in methods {
        let vals: Vec<Complex64> = f
            .par_iter()
            .map(|&f| match m {
                "numeric" => doppler::doppler_transfer_numeric(&sys, k, l, jw(f), VelocityQuadrature::default()),
                _ => doppler::doppler_transfer_analytic(&sys, k, l, jw(f)),
            })
            .collect::<Result<_>>()?;
        for (f, g) in f.iter().zip(&vals) {
            let mut row = bode_row(*f, *g);
            row.insert(1, m.into());
            t.push(row);
        }
        summary.insert(format!("{m}_first"), cplx(vals[0]));
    }
    summary.insert("pair".into(), json!(a.pair));
    summary.insert("sigma_v_m_per_s".into(), json!(p.sigma_v()));
    Ok(Report::summary(Value::Object(summary)).with_table(
        &format!("doppler_tf_{}", a.pair),
        t,
        &["thermally averaged T_kl in s"],
    ))
}

fn link_noise(p: &AtomicParams, cfg: &Config, op: &OperatingPoint) -> budget::BasebandNoise {
    budget::baseband_noise_psd(
        &cfg.chain,
        &budget::NoiseInputs {
            v_ref: cfg.link.v_ref_v,
            cell_length: p.cell_length,
            gq_at_if: op.gq_at_if.norm(),
            zeta: op.zeta,
            e_n_bb: budget::bbr_field_density(p.f_lo(), p.temperature),
            i_ph: op.i_ph,
            temperature: p.temperature,
        },
    )
}

fn noise_cmd(p: &AtomicParams, cfg: &Config) -> Result<Report> {
    let op = OperatingPoint::new(p, cfg.link.f_if_hz)?;
    let b = op.noise_budget(p, &cfg.chain)?;
    let bb = link_noise(p, cfg, &op);
    let mut t = Table::new(&["quantity", "value", "unit"]);
    let rows: [(&str, f64, &str); 19] = [
        ("zeta", b.zeta, "1"),
        ("gq_abs", b.gq_abs_s, "S"),
        ("i_ph", b.i_ph_a, "A"),
        ("bbr", b.bbr, "A^2/Hz"),
        ("shot", b.shot, "A^2/Hz"),
        ("rs_thermal", b.rs_thermal, "A^2/Hz"),
        ("rin", b.rin, "A^2/Hz"),
        ("total_current", b.total_current, "A^2/Hz"),
        ("out_bbr", b.out_bbr, "W/Hz"),
        ("out_shot", b.out_shot, "W/Hz"),
        ("out_rs_thermal", b.out_rs_thermal, "W/Hz"),
        ("out_rin", b.out_rin, "W/Hz"),
        ("out_circuit_thermal", b.out_circuit_thermal, "W/Hz"),
        ("f_q", b.factors.f_q, "1"),
        ("f_tia", b.factors.f_tia, "1"),
        ("f_total", b.factors.f_total, "1"),
        ("g_q", b.factors.g_q, "1"),
        ("g_tia", b.factors.g_tia, "1"),
        ("sensitivity", b.sensitivity, "V/m/sqrt(Hz)"),
    ];
    for (q, v, u) in rows {
        t.push(vec![q.into(), v.into(), u.into()]);
    }
    let dbm = |w: f64| 10.0 * (w / 1e-3).log10();
    let summary = json!({
        "budget": b,
        "db": {
            "out_bbr_dbm_hz": dbm(b.out_bbr),
            "out_shot_dbm_hz": dbm(b.out_shot),
            "out_rs_thermal_dbm_hz": dbm(b.out_rs_thermal),
            "out_rin_dbm_hz": dbm(b.out_rin),
            "out_circuit_thermal_dbm_hz": dbm(b.out_circuit_thermal),
            "f_q_db": to_db(b.factors.f_q),
            "f_tia_db": to_db(b.factors.f_tia),
            "f_total_db": to_db(b.factors.f_total),
            "g_q_db": to_db(b.factors.g_q),
            "g_tia_db": to_db(b.factors.g_tia),
        },
        "baseband_v2_per_hz": bb,
    });
    Ok(Report::summary(summary).with_table("noise", t, &[]))
}

fn nf_sweep(p: &AtomicParams, cfg: &Config, common: &Common, a: &NfSweepArgs) -> Result<Report> {
    let n = common.points.unwrap_or(50);
    if n < 2 || !(a.rmin > 0.0 && a.rmax > a.rmin) {
        return Err(bad("nf-sweep needs 0 < rmin < rmax and >= 2 points"));
    }
    let op = OperatingPoint::new(p, cfg.link.f_if_hz)?;
    let pts = op.nf_sweep(p, &cfg.chain, &log_grid(a.rmin, a.rmax, n))?;
    let mut t = Table::new(&["r_s_ohm", "f_q_db", "f_tia_db", "f_total_db", "g_q_db", "g_tia_db"]);
    for q in &pts {
        let f = &q.factors;
        t.push_f64(&[q.r_s, to_db(f.f_q), to_db(f.f_tia), to_db(f.f_total), to_db(f.g_q), to_db(f.g_tia)]);
    }
    let best = &pts[noise::nf_argmin(&pts).expect("non-empty sweep")];
    let summary = json!({
        "argmin_r_s_ohm": best.r_s,
        "min_f_total_db": to_db(best.factors.f_total),
    });
    Ok(Report::summary(summary).with_table("nf_sweep", t, &[]))
}

fn sensitivity(p: &AtomicParams, a: &SensitivityArgs) -> Result<Report> {
    if !(a.zeta > 0.0 && a.zeta <= 1.0) {
        return Err(bad("--zeta must lie in (0, 1]"));
    }
    let s = noise::sensitivity(p.f_lo(), p.temperature, a.zeta);
    let mut t = Table::new(&[
        "temperature_k",
        "f_lo_hz",
        "zeta",
        "sensitivity_v_per_m_rthz",
        "sensitivity_pv_per_cm_rthz",
    ]);
    t.push_f64(&[p.temperature, p.f_lo(), a.zeta, s, s * 1e10]);
    Ok(Report::summary(json!({ "sensitivity_v_per_m_rthz": s, "zeta": a.zeta })).with_table(
        "sensitivity",
        t,
        &[],
    ))
}

fn zeta(p: &AtomicParams, a: &ZetaArgs) -> Result<Report> {
    let ell = a.ell.unwrap_or_else(|| noise::normalized_length(p));
    let z = noise::coherence_factor(ell)?;
    let mut t = Table::new(&["ell", "zeta"]);
    t.push_f64(&[ell, z]);
    Ok(Report::summary(json!({ "ell": ell, "zeta": z })).with_table("zeta", t, &[]))
}

fn simulate(p: &AtomicParams, cfg: &Config, a: &SimulateArgs) -> Result<Report> {
    let opts = ScOptions {
        mode: match a.mode {
            ModeArg::Lti => Mode::Lti,
            ModeArg::Rk4 => Mode::Rk4,
        },
        noise: !a.no_noise,
        e_sig: a.e_sig,
        trace_decimation: a.decimate,
        ..ScOptions::default()
    };
    let r = link::simulate_single_carrier(p, &cfg.chain, &cfg.link, &opts)?;
    let mut cons = Table::new(&["sym_index", "tx_re", "tx_im", "rx_re", "rx_im"]);
    for (i, (tx, rx)) in r.tx_symbols.iter().zip(&r.rx_symbols).enumerate() {
        cons.push(vec![i.into(), tx.re.into(), tx.im.into(), rx.re.into(), rx.im.into()]);
    }
    let mut wave = Table::new(&["t_s", "tx_i_v_per_m", "tx_q_v_per_m", "rx_i_v", "rx_q_v"]);
    for i in 0..r.trace.t.len() {
        let (tx, rx) = (r.trace.tx[i], r.trace.rx[i]);
        wave.push_f64(&[r.trace.t[i], tx.re, tx.im, rx.re, rx.im]);
    }
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let mut summary = serde_json::to_value(&r).expect("result serializes");
    if let Value::Object(m) = &mut summary {
        m.remove("tx_symbols");
        m.remove("rx_symbols");
    }
    Ok(Report::summary(summary)
        .with_table("constellation", cons, &["rx symbols are gain-corrected matched-filter outputs"])
        .with_table("waveform", wave, &["tx is the complex field envelope, rx the baseband voltage"]))
}

fn mimo_cmd(cfg: &Config, a: &MimoArgs) -> Result<Report> {
    if !(a.pstep > 0.0 && a.pmax >= a.pmin) {
        return Err(bad("mimo-capacity needs pstep > 0 and pmax >= pmin"));
    }
    let coupling = match &a.coupling {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
            Some(rydex::io::matrix_from_csv(&text)?)
        }
        None => None,
    };
    let setup = mimo::MimoSetup::from_config(cfg, coupling)?;
    let steps = ((a.pmax - a.pmin) / a.pstep + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| a.pmin + a.pstep * i as f64).collect();
    let trials = a.trials.unwrap_or(cfg.mimo.trials);
    let res = mimo::mimo_capacity(&setup, &grid, trials, cfg.link.seed)?;
    let mut t = Table::new(&["p_t_dbm", "scheme", "receiver", "mean_capacity_bps_hz", "p5_bps_hz", "p95_bps_hz"]);
    for c in &res {
        t.push(vec![
            c.p_t_dbm.into(),
            c.scheme.name().into(),
            c.receiver.name().into(),
            c.mean().into(),
            c.quantile(0.05).into(),
            c.quantile(0.95).into(),
        ]);
    }
    let summary = json!({
        "n_antennas": setup.n_antennas,
        "trials": trials,
        "path_gain": setup.path_gain,
        "quantum_snr_per_w": setup.quantum_inv_noise * setup.path_gain,
        "classical_snr_per_w": setup.classical_antenna_gain * setup.path_gain / setup.classical_noise_power,
    });
    Ok(Report::summary(summary).with_table("mimo_capacity", t, &[]))
}
