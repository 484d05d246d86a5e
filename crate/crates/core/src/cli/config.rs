//! Run configuration: a TOML document plus dotted-path overrides.
//!
//! Overrides are applied to the parsed TOML tree before deserialization, so
//! `--set trap.n_ions=5` and a dedicated `--n-ions 5` flag behave the same
//! and both beat the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::TrapConfig;
use crate::detect::{tune_bright_leak, BeamProfile, PhotonModel};
use crate::dynamics::{Branching, NoiseModel};
use crate::error::{Error, Result};

/// Uniform or per-ion Rabi frequency (kHz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Omega {
    Uniform(f64),
    PerIon(Vec<f64>),
}

impl Omega {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            Omega::Uniform(w) => std::slice::from_ref(w),
            Omega::PerIon(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RampConfig {
    /// Initial field as a multiple of the mean |J|; ignored when `b0` is set.
    pub b0_over_j: f64,
    /// Absolute initial field (kHz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    pub tau: f64,
    pub t_final: f64,
    pub b_final: f64,
    pub samples: usize,
}

impl Default for RampConfig {
    fn default() -> Self {
        Self { b0_over_j: 5.0, b0: None, tau: 80.0, t_final: 600.0, b_final: 0.0, samples: 25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Spontaneous-emission rate per ion (1/ms).
    pub gamma_se: f64,
    /// Dephasing rate per ion (1/ms).
    pub gamma_deph: f64,
    pub branch: Branching,
    /// Probability that state preparation flips an ion.
    pub flip_error: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let n = NoiseModel::experiment();
        Self { gamma_se: n.gamma_se, gamma_deph: n.gamma_deph, branch: n.branch, flip_error: 0.0 }
    }
}

impl NoiseConfig {
    pub fn model(&self) -> NoiseModel {
        NoiseModel { gamma_se: self.gamma_se, gamma_deph: self.gamma_deph, branch: self.branch }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { n_values: (2..=9).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DickeConfig {
    pub n_values: Vec<usize>,
    pub b_over_j_min: f64,
    pub b_over_j_max: f64,
    pub points_per_decade: usize,
}

impl Default for DickeConfig {
    fn default() -> Self {
        Self { n_values: vec![100], b_over_j_min: 0.05, b_over_j_max: 20.0, points_per_decade: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Agreement threshold in combined standard errors.
    pub max_z: f64,
    /// Floor added in quadrature to the combined standard error.
    pub se_floor: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_z: 3.0, se_floor: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub n_values: Vec<usize>,
    /// Worker counts to time; 0 means all cores.
    pub workers: Vec<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { n_values: vec![2], workers: vec![1, 8] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub mean_bright: f64,
    pub mean_dark: f64,
    /// Bright-to-dark pumping probability; tuned to `target_overlap` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak_bright_to_dark: Option<f64>,
    pub leak_dark_to_bright: f64,
    pub target_overlap: f64,
    pub intensity_jitter: f64,
    pub beam_profile: BeamProfile,
    pub shots: u64,
    pub seed: u64,
    pub n_resample: usize,
    pub jitter_envelope: Vec<f64>,
    pub resample_counts: bool,
    /// P(s) used by `synthesize`; binomial when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        let m = PhotonModel::experiment();
        Self {
            mean_bright: m.mean_bright,
            mean_dark: m.mean_dark,
            leak_bright_to_dark: None,
            leak_dark_to_bright: m.leak_dark_to_bright,
            target_overlap: 0.01,
            intensity_jitter: m.intensity_jitter,
            beam_profile: m.beam_profile,
            shots: 100_000,
            seed: 0,
            n_resample: 400,
            jitter_envelope: Vec::new(),
            resample_counts: true,
            truth: None,
        }
    }
}

impl DetectConfig {
    pub fn model(&self) -> Result<PhotonModel> {
        let base = PhotonModel {
            mean_bright: self.mean_bright,
            mean_dark: self.mean_dark,
            leak_bright_to_dark: self.leak_bright_to_dark.unwrap_or(0.0),
            leak_dark_to_bright: self.leak_dark_to_bright,
            intensity_jitter: self.intensity_jitter,
            beam_profile: self.beam_profile,
        };
        base.validate()?;
        match self.leak_bright_to_dark {
            Some(_) => Ok(base),
            None => tune_bright_leak(&base, self.target_overlap),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), csv: true, json: true }
    }
}

fn default_trap() -> TrapConfig {
    TrapConfig::experiment(9)
}

fn default_omega() -> Omega {
    Omega::Uniform(370.0)
}

fn default_n_traj() -> u64 {
    1000
}

/// Complete run configuration. Every field has a default, so an empty file is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_omega")]
    pub omega: Omega,
    /// Absolute beatnote detuning (kHz); takes precedence over `mu_offset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Detuning above the COM mode (kHz) when `mu` is absent.
    #[serde(default = "default_mu_offset")]
    pub mu_offset: f64,
    /// When `mu` is absent, the offset is raised to at least this multiple of
    /// the largest COM `eta * Omega`; 0 disables the floor.
    #[serde(default = "default_mu_guard")]
    pub mu_guard: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: u64,
    #[serde(default)]
    pub base_seed: u64,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_trap")]
    pub trap: TrapConfig,
    #[serde(default)]
    pub ramp: RampConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub dicke: DickeConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub bench: BenchConfig,
    #[serde(default)]
    pub detect: DetectConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_mu_offset() -> f64 {
    30.0
}

fn default_mu_guard() -> f64 {
    crate::chain::ADIABATIC_MARGIN
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config deserializes")
    }
}

impl RunConfig {
    /// Parses TOML text and applies `key.path=value` overrides on top.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut tree: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (key, value) in overrides {
            apply_override(&mut tree, key, value)?;
        }
        let cfg: RunConfig = tree.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads an optional config file and applies overrides.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let text = match path {
            Some(p) => {
                std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?
            }
            None => String::new(),
        };
        Self::from_toml_with_overrides(&text, overrides)
    }

    /// Cross-field checks that do not require running anything.
    pub fn validate(&self) -> Result<()> {
        self.trap.validate()?;
        let n = self.trap.n_ions;
        let len = self.omega.as_slice().len();
        if len != 1 && len != n {
            return Err(Error::Config(format!("omega has {len} entries; expected 1 or n_ions = {n}")));
        }
        if self.n_traj == 0 {
            return Err(Error::Config("n_traj must be at least 1".into()));
        }
        if self.ramp.samples == 0 {
            return Err(Error::Config("ramp.samples must be at least 1".into()));
        }
        if self.sweep.n_values.contains(&0) || self.dicke.n_values.contains(&0) || self.bench.n_values.contains(&0) {
            return Err(Error::Config("ion counts must be at least 1".into()));
        }
        if let Some(truth) = &self.detect.truth {
            if truth.len() != n + 1 {
                return Err(Error::Config(format!(
                    "detect.truth has {} entries; expected n_ions + 1 = {}",
                    truth.len(),
                    n + 1
                )));
            }
        }
        self.noise.model().validate()?;
        Ok(())
    }

    /// Beatnote detuning given the COM frequency and its largest `eta * Omega`.
    pub fn resolved_mu(&self, nu_com: f64, com_coupling: f64) -> f64 {
        self.mu.unwrap_or(nu_com + self.mu_offset.max(self.mu_guard * com_coupling))
    }

    /// Same configuration with a different ion count. A per-ion Rabi list is
    /// only meaningful for its own length, so it collapses to its mean.
    pub fn with_n(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.trap.n_ions = n;
        if let Omega::PerIon(v) = &self.omega {
            if v.len() != n {
                out.omega = Omega::Uniform(v.iter().sum::<f64>() / v.len() as f64);
            }
        }
        if out.detect.truth.as_ref().is_some_and(|t| t.len() != n + 1) {
            out.detect.truth = None;
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// Splits `key=value` into a pair.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("override `{s}` is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn apply_override(tree: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    // Values parse as TOML; anything that does not is taken as a bare string.
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut node = tree;
    for part in &parts[..parts.len() - 1] {
        let entry = node.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node =
            entry.as_table_mut().ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::from_toml_with_overrides("", &[]).unwrap();
        assert_eq!(cfg.trap.n_ions, 9);
        assert_eq!(cfg.omega, Omega::Uniform(370.0));
        assert_eq!(cfg.ramp.tau, 80.0);
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn overrides_beat_file() {
        let text = "n_traj = 50\n[trap]\nn_ions = 4\nnu_x = 4748.0\nnu_z = 1002.0\n";
        let ov = vec![parse_override("trap.n_ions=3").unwrap(), parse_override("noise.gamma_se = 0.0").unwrap()];
        let cfg = RunConfig::from_toml_with_overrides(text, &ov).unwrap();
        assert_eq!(cfg.trap.n_ions, 3);
        assert_eq!(cfg.n_traj, 50);
        assert_eq!(cfg.noise.gamma_se, 0.0);
    }

    #[test]
    fn omega_accepts_scalar_or_list() {
        let cfg = RunConfig::from_toml_with_overrides(
            "omega = [300.0, 310.0]\n[trap]\nn_ions = 2\nnu_x = 4748.0\nnu_z = 1002.0\n",
            &[],
        )
        .unwrap();
        assert_eq!(cfg.omega.as_slice(), &[300.0, 310.0]);
        assert!(RunConfig::from_toml_with_overrides(
            "omega = [1.0, 2.0, 3.0]\n[trap]\nn_ions = 2\nnu_x = 4748.0\nnu_z = 1002.0\n",
            &[]
        )
        .is_err());
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = RunConfig::from_toml_with_overrides("bogus = 1", &[]).unwrap_err();
        assert!(err.is_config());
        let err = RunConfig::from_toml_with_overrides("", &[parse_override("ramp.tua=3").unwrap()]).unwrap_err();
        assert!(err.is_config());
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml_with_overrides(&text, &[]).unwrap(), cfg);
    }
}
