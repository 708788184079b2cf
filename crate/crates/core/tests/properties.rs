use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use rydex::atomic::{self, DensityMatrix};
use rydex::io::{fmt_f64, matrix_from_csv, matrix_to_csv};
use rydex::link::{mimo, pulse::Pulse, qam};
use rydex::noise::{self, NoiseBudget};
use rydex::rk4::MasterEquation;
use rydex::{AtomicParams, Config};

fn params_with(f: impl FnOnce(&mut rydex::config::AtomicConfig)) -> AtomicParams {
    let mut cfg = Config::cs133_default();
    f(&mut cfg.atomic);
    cfg.atomic_params().unwrap()
}

fn committed_op() -> &'static rydex::OperatingPoint {
    static OP: std::sync::OnceLock<rydex::OperatingPoint> = std::sync::OnceLock::new();
    OP.get_or_init(|| {
        let cfg = Config::cs133_default();
        rydex::OperatingPoint::new(&cfg.atomic_params().unwrap(), cfg.link.f_if_hz).unwrap()
    })
}

/// Rabi frequencies in Hz, decay rates in Hz, detunings in Hz.
fn atomic_strategy() -> impl Strategy<Value = AtomicParams> {
    (
        1e6..2e7f64,
        5e5..8e6f64,
        -2e6..2e6f64,
        -2e6..2e6f64,
        1e2..1e5f64,
        0.005..0.2f64,
    )
        .prop_map(|(op, oc, dp, dc, g34, e_lo)| {
            params_with(|a| {
                a.omega_p_hz = op;
                a.omega_c_hz = oc;
                a.delta_p_hz = dp;
                a.delta_c_hz = dc;
                a.gamma3_hz = g34;
                a.gamma4_hz = g34;
                a.e_lo_v_per_m = e_lo;
            })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn steady_state_is_a_density_matrix(p in atomic_strategy()) {
        let sys = atomic::build_liouvillian(&p).unwrap();
        let d = sys.steady_rho().diagnostics();
        prop_assert!(d.is_valid(), "{d:?}");
    }

    #[test]
    fn trace_row_annihilates_generator(p in atomic_strategy()) {
        let sys = atomic::build_liouvillian(&p).unwrap();
        let u4 = sys.qc.column(0).into_owned();
        let row = u4.transpose() * &sys.a0;
        prop_assert!(row.norm() <= 1e-12 * sys.a0.norm());
        prop_assert!(sys.poles.iter().all(|z| z.re < 0.0));
    }

    #[test]
    fn zeta_in_unit_interval(log_ell in -3.0..2.0f64) {
        let z = noise::coherence_factor(10f64.powf(log_ell)).unwrap();
        prop_assert!(z > 0.0 && z < 1.0);
    }

    #[test]
    fn budget_psds_nonnegative(
        r_s in 10.0..1e6f64,
        temp in 1.0..400.0f64,
        gq in 1e-6..1e-1f64,
        i_ph in 1e-8..1e-3f64,
        zeta in 0.01..1.0f64,
    ) {
        let mut cfg = Config::cs133_default();
        cfg.atomic.temperature_k = temp;
        let p = cfg.atomic_params().unwrap();
        let chain = cfg.chain.with_r_s(r_s);
        let b = NoiseBudget::new(&p, &chain, gq, i_ph, zeta).unwrap();
        for v in [b.bbr, b.shot, b.rs_thermal, b.rin, b.out_bbr, b.out_shot,
                  b.out_rs_thermal, b.out_rin, b.out_circuit_thermal] {
            prop_assert!(v >= 0.0 && v.is_finite());
        }
        prop_assert!(b.factors.f_tia >= 1.0);
        prop_assert!(b.factors.f_total >= b.factors.f_q);
        // F_q = 2ζ·(B_Planck/B_RJ)·(total/BBR), so F_q < 1 is possible when
        // ζ < 1/2 and the internal sources are negligible.
        let nu = p.f_lo();
        let planck_over_rj = noise::spectral_radiance(nu, temp) / noise::rayleigh_jeans(nu, temp);
        let want = 2.0 * zeta * planck_over_rj * b.total_current / b.bbr;
        prop_assert!((b.factors.f_q / want - 1.0).abs() < 1e-9);
    }

    /// At the committed cell and readout, F_total ≥ 1 over bias resistor and
    /// temperature.
    #[test]
    fn noise_factor_at_least_one_at_committed_point(r_s in 10.0..1e6f64, temp in 1.0..400.0f64) {
        let mut cfg = Config::cs133_default();
        cfg.atomic.temperature_k = temp;
        let p = cfg.atomic_params().unwrap();
        let b = committed_op().noise_budget(&p, &cfg.chain.with_r_s(r_s)).unwrap();
        prop_assert!(b.factors.f_total >= 1.0, "{}", b.factors.f_total);
    }

    #[test]
    fn water_filling_dominates_equal_power(seed in any::<u64>(), n in 1usize..9, snr_db in -10.0..40.0f64) {
        let h = mimo::trial_channel(seed, 0, n);
        let snr = 10f64.powf(snr_db / 10.0);
        let wf = mimo::capacity_waterfill(&h, snr);
        let eq = mimo::capacity_equal(&h, snr);
        prop_assert!(wf >= eq - 1e-9 * eq.abs().max(1.0), "{wf} < {eq}");
    }

    #[test]
    fn water_levels_are_a_power_split(g in proptest::collection::vec(1e-6..1e3f64, 1..12)) {
        let p = mimo::water_fill(&g);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qam_frames_have_unit_power(seed in any::<u64>(), k in 1u32..4) {
        let m = 4usize.pow(k);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let x = qam::unit_power_frame(m, 4 * m, &mut rng).unwrap();
        prop_assert!((qam::mean_power(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn float_format_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn matrix_csv_round_trips(v in proptest::collection::vec(-1e6..1e6f64, 18)) {
        let m = rydex::linalg::CMat::from_fn(3, 3, |i, j| Complex64::new(v[3 * i + j], v[9 + 3 * i + j]));
        prop_assert_eq!(matrix_from_csv(&matrix_to_csv(&m)).unwrap(), m);
    }

    #[test]
    fn pulses_have_unit_energy(span in 2usize..20, rolloff in 0.0..1.0f64, rrc in any::<bool>()) {
        use rydex::config::PulseShape;
        let shape = if rrc { PulseShape::Rrc } else { PulseShape::Sinc };
        let t_sym = 1e-5;
        let p = Pulse::new(shape, t_sym, span, rolloff);
        let n = 20_000;
        let h = 2.0 * p.half_width() / n as f64;
        let e: f64 = (0..=n).map(|k| {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            w * p.eval(-p.half_width() + k as f64 * h).powi(2)
        }).sum::<f64>() * h / t_sym;
        prop_assert!((e - 1.0).abs() < 1e-3, "energy {e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Trace, Hermiticity and positivity along driven RK4 trajectories.
    #[test]
    fn rk4_trajectories_stay_physical(
        p in atomic_strategy(),
        ratio in 0.0..0.5f64,
        f_if in 1e4..1e6f64,
    ) {
        let eq = MasterEquation::new(&p).unwrap();
        let dt = 1e-9f64.min(0.5 * eq.max_step());
        let w_lo = p.omega_lo();
        let w = 2.0 * std::f64::consts::PI * f_if;
        let drive = move |t: f64| Complex64::from_polar(ratio * w_lo, w * t);
        let traj = eq.run(&DensityMatrix::ground(), drive, 0.0, dt, 3000, 100).unwrap();
        prop_assert!(traj.max_trace_drift < 1e-9);
        for rho in &traj.rho {
            let d = rho.diagnostics();
            prop_assert!(d.hermiticity < 1e-12 && d.trace_error < 1e-9, "{d:?}");
            prop_assert!(d.min_eigenvalue > -1e-9, "{d:?}");
        }
    }
}

#[test]
fn mimo_capacity_independent_of_thread_count() {
    let cfg = Config::cs133_default();
    let setup = mimo::MimoSetup::from_config(&cfg, None).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mimo::mimo_capacity(&setup, &[0.0, 10.0], 32, 7).unwrap())
    };
    let bits = |r: Vec<mimo::CapacitySamples>| -> Vec<u64> {
        r.iter().flat_map(|c| c.samples.iter().map(|x| x.to_bits())).collect()
    };
    assert_eq!(bits(run(1)), bits(run(4)));
}

#[test]
fn single_carrier_is_seed_reproducible() {
    use rydex::link::{simulate_single_carrier, ScOptions};
    let cfg = Config::cs133_default();
    let p = cfg.atomic_params().unwrap();
    let opts = ScOptions { trace_decimation: 0, ..ScOptions::default() };
    let a = simulate_single_carrier(&p, &cfg.chain, &cfg.link, &opts).unwrap();
    let b = simulate_single_carrier(&p, &cfg.chain, &cfg.link, &opts).unwrap();
    let bits = |v: &[Complex64]| -> Vec<(u64, u64)> { v.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect() };
    assert_eq!(bits(&a.rx_symbols), bits(&b.rx_symbols));
    assert_eq!(a.snr_db.to_bits(), b.snr_db.to_bits());

    let mut other = cfg.link.clone();
    other.seed += 1;
    let c = simulate_single_carrier(&p, &cfg.chain, &other, &opts).unwrap();
    assert_ne!(bits(&a.tx_symbols), bits(&c.tx_symbols));
}
