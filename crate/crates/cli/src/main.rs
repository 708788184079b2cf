mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rydex::Config;

#[derive(Parser, Debug)]
#[command(name = "rydex", version, about = "Rydberg superheterodyne receiver simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags accepted by every subcommand.
#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// JSON config file (default: the committed Cs-133 config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Write all artifacts and the run manifest into this directory.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Overrides link.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides atomic.temperature_k [K].
    #[arg(long, global = true)]
    temp: Option<f64>,
    /// Lower frequency of sweeps [Hz].
    #[arg(long, global = true)]
    fmin: Option<f64>,
    /// Upper frequency of sweeps [Hz].
    #[arg(long, global = true)]
    fmax: Option<f64>,
    /// Number of sweep points.
    #[arg(long, global = true)]
    points: Option<usize>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Steady-state density matrix and probe transmission.
    Steady(commands::SteadyArgs),
    /// Probe transmission and slope versus E_LO.
    Dcsweep(commands::DcSweepArgs),
    /// Bode data of a transfer function T_kl(iω).
    Tf(commands::TfArgs),
    /// Bode data of the quantum transconductance g_q(iω).
    Gq(commands::GqArgs),
    /// Impulse and step response of g_q.
    Impulse(commands::ImpulseArgs),
    /// Poles and zeros of g_q.
    Pz,
    /// Doppler-averaged T_kl(iω), numeric and analytic.
    DopplerTf(commands::DopplerArgs),
    /// Noise budget at the committed operating point.
    Noise,
    /// Noise factors versus the bias resistor R_s.
    NfSweep(commands::NfSweepArgs),
    /// BBR-limited field sensitivity.
    Sensitivity(commands::SensitivityArgs),
    /// BBR coherence factor ζ(ℓ).
    Zeta(commands::ZetaArgs),
    /// Waveform-level single-carrier link simulation.
    SimulateSc(commands::SimulateArgs),
    /// Monte Carlo MIMO capacity.
    MimoCapacity(commands::MimoArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Steady(_) => "steady",
            Command::Dcsweep(_) => "dcsweep",
            Command::Tf(_) => "tf",
            Command::Gq(_) => "gq",
            Command::Impulse(_) => "impulse",
            Command::Pz => "pz",
            Command::DopplerTf(_) => "doppler-tf",
            Command::Noise => "noise",
            Command::NfSweep(_) => "nf-sweep",
            Command::Sensitivity(_) => "sensitivity",
            Command::Zeta(_) => "zeta",
            Command::SimulateSc(_) => "simulate-sc",
            Command::MimoCapacity(_) => "mimo-capacity",
        }
    }
}

/// Process exit codes.
const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn exit_code(e: &rydex::Error) -> u8 {
    match e {
        rydex::Error::Config { .. } | rydex::Error::ConfigParse(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn load_config(common: &Common) -> rydex::Result<Config> {
    let mut cfg = match &common.config {
        Some(path) => Config::from_path(path)?,
        None => Config::cs133_default(),
    };
    if let Some(t) = common.temp {
        cfg.atomic.temperature_k = t;
    }
    if let Some(s) = common.seed {
        cfg.link.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads() {
    if let Some(n) = std::env::var("RYDEX_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // Fails only if a global pool already exists.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let start = std::time::Instant::now();
    let cfg = match load_config(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let report = match commands::run(&cli.cmd, &cli.common, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let manifest = output::Manifest::new(cli.cmd.name(), &cli.cmd, &cli.common, &cfg);
    match output::emit(&report, manifest, &cli.common, start) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}
