//! Configuration schema and the physical parameter sets derived from it.
//!
//! Config files are JSON with the unit spelled out in every key
//! (`omega_p_hz`, `cell_length_m`, ...). Frequencies and rates are given in
//! Hz (i.e. divided by 2π) and converted to rad/s on load; dipoles are given
//! in units of e·a0. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::constants::{ATOMIC_MASS_UNIT, BOLTZMANN, EA0, HBAR, SPEED_OF_LIGHT, TWO_PI};
use crate::error::{Error, Result};

/// The committed cesium-133 operating point all reference values are pinned to.
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../../../configs/cs133_default.json");

/// Top-level config file. Every subcommand reads the same schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub atomic: AtomicConfig,
    pub chain: ReceiverChain,
    pub link: LinkConfig,
    pub mimo: MimoConfig,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("<file>", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    /// The committed default configuration.
    pub fn cs133_default() -> Self {
        Self::from_json(DEFAULT_CONFIG_JSON).expect("committed default config is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.atomic_params()?;
        self.chain.validate()?;
        self.link.validate()?;
        self.mimo.validate()
    }

    pub fn atomic_params(&self) -> Result<AtomicParams> {
        AtomicParams::from_config(&self.atomic)
    }
}

/// Atomic and optical inputs as they appear in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicConfig {
    pub omega_p_hz: f64,
    pub omega_c_hz: f64,
    pub delta_p_hz: f64,
    pub delta_c_hz: f64,
    pub delta_lo_hz: f64,
    pub gamma_hz: f64,
    pub gamma2_hz: f64,
    pub gamma3_hz: f64,
    pub gamma4_hz: f64,
    pub mu12_ea0: f64,
    pub mu_rf_ea0: f64,
    pub n0_per_m3: f64,
    pub cell_length_m: f64,
    pub lambda_p_m: f64,
    pub lambda_c_m: f64,
    pub f_lo_hz: f64,
    pub temperature_k: f64,
    pub atom_mass_amu: f64,
    pub probe_power_in_w: f64,
    pub pd_quantum_efficiency: f64,
    pub e_lo_v_per_m: f64,
}

/// Physical parameters in SI units with all frequencies in rad/s.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicParams {
    pub omega_p: f64,
    pub omega_c: f64,
    pub delta_p: f64,
    pub delta_c: f64,
    pub delta_lo: f64,
    pub gamma: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    pub mu12: f64,
    pub mu_rf: f64,
    pub n0: f64,
    pub cell_length: f64,
    pub lambda_p: f64,
    pub lambda_c: f64,
    pub lambda_lo: f64,
    pub temperature: f64,
    pub atom_mass: f64,
    pub probe_power_in: f64,
    pub pd_quantum_efficiency: f64,
    pub e_lo: f64,
}

fn positive(key: &str, unit: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be finite and > 0 [{unit}], got {v}")))
    }
}

fn finite(key: &str, unit: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be finite [{unit}], got {v}")))
    }
}

impl AtomicParams {
    pub fn from_config(c: &AtomicConfig) -> Result<Self> {
        positive("atomic.omega_p_hz", "Hz", c.omega_p_hz)?;
        positive("atomic.omega_c_hz", "Hz", c.omega_c_hz)?;
        finite("atomic.delta_p_hz", "Hz", c.delta_p_hz)?;
        finite("atomic.delta_c_hz", "Hz", c.delta_c_hz)?;
        finite("atomic.delta_lo_hz", "Hz", c.delta_lo_hz)?;
        positive("atomic.gamma_hz", "Hz", c.gamma_hz)?;
        positive("atomic.gamma2_hz", "Hz", c.gamma2_hz)?;
        positive("atomic.gamma3_hz", "Hz", c.gamma3_hz)?;
        positive("atomic.gamma4_hz", "Hz", c.gamma4_hz)?;
        positive("atomic.mu12_ea0", "e*a0", c.mu12_ea0)?;
        positive("atomic.mu_rf_ea0", "e*a0", c.mu_rf_ea0)?;
        positive("atomic.n0_per_m3", "m^-3", c.n0_per_m3)?;
        positive("atomic.cell_length_m", "m", c.cell_length_m)?;
        positive("atomic.lambda_p_m", "m", c.lambda_p_m)?;
        positive("atomic.lambda_c_m", "m", c.lambda_c_m)?;
        positive("atomic.f_lo_hz", "Hz", c.f_lo_hz)?;
        if !(c.temperature_k.is_finite() && c.temperature_k >= 0.0) {
            return Err(Error::config("atomic.temperature_k", "must be >= 0 [K]"));
        }
        positive("atomic.atom_mass_amu", "u", c.atom_mass_amu)?;
        positive("atomic.probe_power_in_w", "W", c.probe_power_in_w)?;
        let eta = c.pd_quantum_efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::config(
                "atomic.pd_quantum_efficiency",
                format!("must lie in (0, 1] [dimensionless], got {eta}"),
            ));
        }
        positive("atomic.e_lo_v_per_m", "V/m", c.e_lo_v_per_m)?;

        Ok(Self {
            omega_p: TWO_PI * c.omega_p_hz,
            omega_c: TWO_PI * c.omega_c_hz,
            delta_p: TWO_PI * c.delta_p_hz,
            delta_c: TWO_PI * c.delta_c_hz,
            delta_lo: TWO_PI * c.delta_lo_hz,
            gamma: TWO_PI * c.gamma_hz,
            gamma2: TWO_PI * c.gamma2_hz,
            gamma3: TWO_PI * c.gamma3_hz,
            gamma4: TWO_PI * c.gamma4_hz,
            mu12: c.mu12_ea0 * EA0,
            mu_rf: c.mu_rf_ea0 * EA0,
            n0: c.n0_per_m3,
            cell_length: c.cell_length_m,
            lambda_p: c.lambda_p_m,
            lambda_c: c.lambda_c_m,
            lambda_lo: SPEED_OF_LIGHT / c.f_lo_hz,
            temperature: c.temperature_k,
            atom_mass: c.atom_mass_amu * ATOMIC_MASS_UNIT,
            probe_power_in: c.probe_power_in_w,
            pd_quantum_efficiency: eta,
            e_lo: c.e_lo_v_per_m,
        })
    }

    /// Re-checks the invariants after programmatic edits.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("omega_p", self.omega_p),
            ("omega_c", self.omega_c),
            ("gamma", self.gamma),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("mu12", self.mu12),
            ("mu_rf", self.mu_rf),
            ("n0", self.n0),
            ("cell_length", self.cell_length),
            ("lambda_p", self.lambda_p),
            ("lambda_c", self.lambda_c),
            ("lambda_lo", self.lambda_lo),
            ("atom_mass", self.atom_mass),
            ("probe_power_in", self.probe_power_in),
            ("e_lo", self.e_lo),
        ];
        for (k, v) in checks {
            positive(k, "SI", v)?;
        }
        if !(self.pd_quantum_efficiency > 0.0 && self.pd_quantum_efficiency <= 1.0) {
            return Err(Error::config("pd_quantum_efficiency", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// LO Rabi frequency μ_RF·E_LO/ħ [rad/s].
    pub fn omega_lo(&self) -> f64 {
        self.mu_rf * self.e_lo / HBAR
    }

    /// Probe wavenumber [m⁻¹].
    pub fn k_p(&self) -> f64 {
        TWO_PI / self.lambda_p
    }

    /// Control wavenumber [m⁻¹].
    pub fn k_c(&self) -> f64 {
        TWO_PI / self.lambda_c
    }

    /// Optical angular frequency of the probe laser [rad/s].
    pub fn probe_angular_frequency(&self) -> f64 {
        TWO_PI * SPEED_OF_LIGHT / self.lambda_p
    }

    pub fn f_lo(&self) -> f64 {
        SPEED_OF_LIGHT / self.lambda_lo
    }

    /// One-dimensional thermal velocity spread sqrt(k_B T / m) [m/s].
    pub fn sigma_v(&self) -> f64 {
        (BOLTZMANN * self.temperature / self.atom_mass).sqrt()
    }

    pub fn with_e_lo(&self, e_lo: f64) -> Self {
        Self {
            e_lo,
            ..self.clone()
        }
    }

    pub fn with_omega_p(&self, omega_p: f64) -> Self {
        Self {
            omega_p,
            ..self.clone()
        }
    }

    pub fn with_temperature(&self, temperature: f64) -> Self {
        Self {
            temperature,
            ..self.clone()
        }
    }
}

/// Photodiode bias network, transimpedance amplifier and load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverChain {
    #[serde(rename = "r_t_ohm")]
    pub r_t: f64,
    #[serde(rename = "i_n_tia_a_per_rthz")]
    pub i_n_tia: f64,
    #[serde(rename = "v_n_tia_v_per_rthz")]
    pub v_n_tia: f64,
    #[serde(rename = "z_in_ohm")]
    pub z_in: f64,
    #[serde(rename = "r_s_ohm")]
    pub r_s: f64,
    #[serde(rename = "r_l_ohm")]
    pub r_l: f64,
    #[serde(rename = "rin_dbc_per_hz")]
    pub rin_dbc_hz: f64,
}

impl ReceiverChain {
    pub fn validate(&self) -> Result<()> {
        positive("chain.r_t_ohm", "ohm", self.r_t)?;
        if !(self.i_n_tia.is_finite() && self.i_n_tia >= 0.0) {
            return Err(Error::config("chain.i_n_tia_a_per_rthz", "must be >= 0 [A/sqrt(Hz)]"));
        }
        if !(self.v_n_tia.is_finite() && self.v_n_tia >= 0.0) {
            return Err(Error::config("chain.v_n_tia_v_per_rthz", "must be >= 0 [V/sqrt(Hz)]"));
        }
        positive("chain.z_in_ohm", "ohm", self.z_in)?;
        positive("chain.r_s_ohm", "ohm", self.r_s)?;
        positive("chain.r_l_ohm", "ohm", self.r_l)?;
        finite("chain.rin_dbc_per_hz", "dBc/Hz", self.rin_dbc_hz)
    }

    /// Current-divider ratio R_s/(R_s + Z_in) at the TIA input.
    pub fn k_c(&self) -> f64 {
        self.r_s / (self.r_s + self.z_in)
    }

    pub fn with_r_s(&self, r_s: f64) -> Self {
        Self {
            r_s,
            ..self.clone()
        }
    }
}

/// Pulse shape used by the single-carrier transmitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    /// Hann-windowed sinc truncated to ±`pulse_span_symbols`.
    Sinc,
    /// Root-raised-cosine with roll-off `rrc_rolloff`.
    Rrc,
}

/// Downlink single-carrier link budget and waveform settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub f_if_hz: f64,
    pub tx_power_dbm: f64,
    pub bs_gain_db: f64,
    pub ue_gain_classical_db: f64,
    pub distance_m: f64,
    pub symbol_period_s: f64,
    pub rk_step_s: f64,
    pub sample_step_s: f64,
    pub v_ref_v: f64,
    pub bandwidth_hz: f64,
    pub modulation_order: usize,
    pub n_symbols: usize,
    pub pulse: PulseShape,
    pub pulse_span_symbols: usize,
    pub rrc_rolloff: f64,
    pub timing_offset_s: f64,
    pub seed: u64,
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        positive("link.f_if_hz", "Hz", self.f_if_hz)?;
        finite("link.tx_power_dbm", "dBm", self.tx_power_dbm)?;
        finite("link.bs_gain_db", "dB", self.bs_gain_db)?;
        finite("link.ue_gain_classical_db", "dB", self.ue_gain_classical_db)?;
        positive("link.distance_m", "m", self.distance_m)?;
        positive("link.symbol_period_s", "s", self.symbol_period_s)?;
        positive("link.rk_step_s", "s", self.rk_step_s)?;
        positive("link.sample_step_s", "s", self.sample_step_s)?;
        positive("link.v_ref_v", "V", self.v_ref_v)?;
        positive("link.bandwidth_hz", "Hz", self.bandwidth_hz)?;
        let m = self.modulation_order;
        let side = (m as f64).sqrt().round() as usize;
        if m < 4 || side * side != m || !side.is_power_of_two() {
            return Err(Error::config(
                "link.modulation_order",
                format!("must be a square power of two >= 4 (4, 16, 64, ...), got {m}"),
            ));
        }
        if self.n_symbols < 8 {
            return Err(Error::config("link.n_symbols", "must be >= 8 [symbols]"));
        }
        if self.pulse_span_symbols == 0 {
            return Err(Error::config("link.pulse_span_symbols", "must be >= 1 [symbols]"));
        }
        if !(0.0..=1.0).contains(&self.rrc_rolloff) {
            return Err(Error::config("link.rrc_rolloff", "must lie in [0, 1]"));
        }
        finite("link.timing_offset_s", "s", self.timing_offset_s)?;
        let ratio = self.symbol_period_s / self.sample_step_s;
        if ratio < 4.0 || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::config(
                "link.sample_step_s",
                "must divide symbol_period_s into an integer number (>= 4) of samples [s]",
            ));
        }
        let sub = self.sample_step_s / self.rk_step_s;
        if (sub - sub.round()).abs() > 1e-9 || sub < 1.0 - 1e-12 {
            return Err(Error::config(
                "link.rk_step_s",
                "must divide sample_step_s into an integer number of steps [s]",
            ));
        }
        Ok(())
    }

    pub fn samples_per_symbol(&self) -> usize {
        (self.symbol_period_s / self.sample_step_s).round() as usize
    }

    pub fn rk_substeps(&self) -> usize {
        (self.sample_step_s / self.rk_step_s).round() as usize
    }
}

/// Multi-antenna capacity study settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MimoConfig {
    pub n_antennas: usize,
    pub bandwidth_hz: f64,
    pub classical_noise_figure_db: f64,
    pub element_spacing_wavelengths: f64,
    pub trials: usize,
}

impl MimoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 {
            return Err(Error::config("mimo.n_antennas", "must be >= 1"));
        }
        positive("mimo.bandwidth_hz", "Hz", self.bandwidth_hz)?;
        if !(self.classical_noise_figure_db.is_finite() && self.classical_noise_figure_db >= 0.0) {
            return Err(Error::config("mimo.classical_noise_figure_db", "must be >= 0 [dB]"));
        }
        positive(
            "mimo.element_spacing_wavelengths",
            "wavelengths",
            self.element_spacing_wavelengths,
        )?;
        if self.trials == 0 {
            return Err(Error::config("mimo.trials", "must be >= 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses_and_converts_hz() {
        let cfg = Config::cs133_default();
        let p = cfg.atomic_params().unwrap();
        assert_eq!(p.omega_p, TWO_PI * cfg.atomic.omega_p_hz);
        assert!((p.lambda_lo - SPEED_OF_LIGHT / 6.9458e9).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG_JSON).unwrap();
        v["atomic"]["omega_p"] = serde_json::json!(1.0);
        let err = Config::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("omega_p"), "{err}");
    }

    #[test]
    fn invalid_value_names_key_and_unit() {
        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG_JSON).unwrap();
        v["atomic"]["gamma3_hz"] = serde_json::json!(-1.0);
        let err = Config::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("atomic.gamma3_hz") && err.contains("Hz"), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG_JSON).unwrap();
        v["atomic"]["pd_quantum_efficiency"] = serde_json::json!(1.5);
        assert!(Config::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let cfg = Config::cs133_default();
        let again = Config::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.atomic_params().unwrap(), again.atomic_params().unwrap());
    }

    #[test]
    fn current_divider_default() {
        let chain = Config::cs133_default().chain;
        assert!((chain.k_c() - 1000.0 / 1060.0).abs() < 1e-15);
    }
}
