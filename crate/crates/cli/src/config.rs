//! Experiment configuration.
//!
//! One JSON document configures every command; each command reads the shared
//! physics sections (`junction`, `modes`, `detector`, `sde`) and its own
//! options block. Missing blocks take the reference-sample defaults. The
//! published schema lives in `docs/config.schema.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use spdsim::constants::E;
use spdsim::detector::{CalibrationPoint, SdeConfig};
use spdsim::escape::PrefactorModel;
use spdsim::pat::DarkIvModel;
use spdsim::source::{reference_modes, CavityMode};
use spdsim::stats::Binning;
use spdsim::JunctionParams;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub junction: JunctionParams,
    pub modes: Vec<CavityMode>,
    pub detector: DetectorSettings,
    pub sde: SdeConfig,
    /// Dark IV model for the PAT commands; derived from `junction` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_iv: Option<DarkIvModel>,
    pub iv: IvOptions,
    pub pat: PatOptions,
    pub sweep_bias: SweepBiasOptions,
    pub sweep_temp: SweepTempOptions,
    pub distribution: DistributionOptions,
    pub fit_rate: FitRateOptions,
    pub master_seed: u64,
    /// Not part of the config hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            junction: JunctionParams::default(),
            modes: reference_modes(),
            detector: DetectorSettings::default(),
            sde: SdeConfig { timestep: 0.05, ..SdeConfig::default() },
            dark_iv: None,
            iv: IvOptions::default(),
            pat: PatOptions::default(),
            sweep_bias: SweepBiasOptions::default(),
            sweep_temp: SweepTempOptions::default(),
            distribution: DistributionOptions::default(),
            fit_rate: FitRateOptions::default(),
            master_seed: 20240917,
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSettings {
    /// Junction noise temperature (K).
    pub junction_temperature: f64,
    /// Bias-independent residual dark rate (Hz).
    pub dark_floor: f64,
    pub include_mqt: bool,
    pub prefactor_model: PrefactorModel,
    /// Non-paralyzable dead time (s).
    pub dead_time: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        DetectorSettings {
            junction_temperature: 0.017,
            dark_floor: 0.01,
            include_mqt: false,
            prefactor_model: PrefactorModel::TransitionState,
            dead_time: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IvOptions {
    /// Drive frequency (Hz).
    pub frequency: f64,
    /// Tien–Gordon amplitudes; 0 gives the dark curve.
    pub alphas: Vec<f64>,
    pub v_min: f64,
    pub v_max: f64,
    pub points: usize,
}

impl Default for IvOptions {
    fn default() -> Self {
        IvOptions { frequency: 13.95e9, alphas: vec![0.0, 0.5, 1.0, 1.5, 2.0], v_min: 0.0, v_max: 0.6e-3, points: 601 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatOptions {
    /// Reference amplitude for 0 dB.
    pub alpha_ref: f64,
    pub power_min_db: f64,
    pub power_max_db: f64,
    pub power_step_db: f64,
    /// Source amplitude seen at the cavity peak.
    pub alpha_source: f64,
    /// Half-width of the frequency sweep in cavity linewidths.
    pub span_linewidths: f64,
    pub sweep_points: usize,
}

impl Default for PatOptions {
    fn default() -> Self {
        PatOptions {
            alpha_ref: 0.2,
            power_min_db: -30.0,
            power_max_db: 4.0,
            power_step_db: 1.0,
            alpha_source: 0.2,
            span_linewidths: 4.0,
            sweep_points: 61,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBiasOptions {
    pub bias_min: f64,
    pub bias_max: f64,
    pub bias_points: usize,
    /// Cavity temperatures (K).
    pub temperatures: Vec<f64>,
    /// SDE trials per bias point and mode.
    pub trials: usize,
    /// Measured response table; replaces the SDE calibration when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration_table: Option<Vec<CalibrationPoint>>,
}

impl Default for SweepBiasOptions {
    fn default() -> Self {
        SweepBiasOptions {
            bias_min: 0.70,
            bias_max: 0.95,
            bias_points: 26,
            temperatures: vec![0.021, 0.030, 0.040, 0.050, 0.060, 0.070, 0.080],
            trials: 200,
            calibration_table: None,
        }
    }
}

impl SweepBiasOptions {
    pub fn biases(&self) -> Vec<f64> {
        linspace(self.bias_min, self.bias_max, self.bias_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepTempOptions {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Relative Gaussian noise on each simulated rate.
    pub relative_noise: f64,
    /// Dark rate of the simulated data (Hz).
    pub dark_rate: f64,
    /// Fit the simulated table.
    pub fit: bool,
}

impl Default for SweepTempOptions {
    fn default() -> Self {
        SweepTempOptions { t_min: 0.021, t_max: 0.080, points: 13, relative_noise: 0.05, dark_rate: 0.01, fit: true }
    }
}

impl SweepTempOptions {
    pub fn temperatures(&self) -> Vec<f64> {
        linspace(self.t_min, self.t_max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistributionOptions {
    /// Cavity temperature (K).
    pub temperature: f64,
    /// Record length (s).
    pub duration: f64,
    /// Switching probability per arriving photon, one entry per mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_probabilities: Option<Vec<f64>>,
    /// Dark rate (Hz).
    pub dark_rate: f64,
    pub bins: usize,
    pub binning: Binning,
    /// Power-law fit window (s).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_law_range: Option<(f64, f64)>,
    /// Counting window for the Fano factor (s). When absent: ten mean
    /// intervals, at most a twentieth of the record.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fano_window: Option<f64>,
    pub bootstrap_resamples: usize,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        DistributionOptions {
            temperature: 0.047,
            duration: 600.0,
            detection_probabilities: None,
            dark_rate: 0.01,
            bins: 60,
            binning: Binning::Log,
            power_law_range: None,
            fano_window: None,
            bootstrap_resamples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FitRateOptions {
    /// Rate table `temp_K,rate_Hz,rate_err_Hz`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Parametric resamples for the empirical spread; 0 disables it.
    pub resamples: usize,
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dark_iv_model(&self) -> DarkIvModel {
        self.dark_iv.unwrap_or(DarkIvModel {
            gap: 0.5 * self.junction.gap_voltage * E,
            normal_resistance: self.junction.normal_resistance,
            subgap_resistance: 100.0 * self.junction.normal_resistance,
            width: 0.5e-6,
        })
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig { output_dir: None, ..self.clone() };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.junction.validate().map_err(CliError::invalid)?;
        for m in &self.modes {
            m.validate().map_err(CliError::invalid)?;
        }
        self.sde.validate().map_err(CliError::invalid)?;
        self.dark_iv_model().validate().map_err(CliError::invalid)?;

        let d = &self.detector;
        positive("detector.junction_temperature", d.junction_temperature)?;
        non_negative("detector.dark_floor", d.dark_floor)?;
        non_negative("detector.dead_time", d.dead_time)?;

        let iv = &self.iv;
        positive("iv.frequency", iv.frequency)?;
        if iv.alphas.is_empty() || iv.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad("iv.alphas must be a non-empty list of values >= 0".into());
        }
        if !(iv.v_min.is_finite() && iv.v_max.is_finite() && iv.v_max > iv.v_min && iv.points >= 2) {
            return bad("iv needs v_max > v_min and points >= 2".into());
        }

        let p = &self.pat;
        positive("pat.alpha_ref", p.alpha_ref)?;
        positive("pat.alpha_source", p.alpha_source)?;
        positive("pat.power_step_db", p.power_step_db)?;
        positive("pat.span_linewidths", p.span_linewidths)?;
        if !(p.power_min_db.is_finite() && p.power_max_db.is_finite() && p.power_max_db > p.power_min_db) {
            return bad("pat needs power_max_db > power_min_db".into());
        }
        if p.sweep_points < 4 {
            return bad("pat.sweep_points must be >= 4".into());
        }

        let s = &self.sweep_bias;
        if !(s.bias_min >= 0.0 && s.bias_max < 1.0 && s.bias_max >= s.bias_min && s.bias_points >= 1) {
            return bad("sweep_bias needs 0 <= bias_min <= bias_max < 1 and bias_points >= 1".into());
        }
        if s.temperatures.is_empty() {
            return bad("sweep_bias.temperatures must not be empty".into());
        }
        for &t in &s.temperatures {
            positive("sweep_bias.temperatures", t)?;
        }
        if s.calibration_table.is_none() && s.trials < 10 {
            return bad("sweep_bias.trials must be >= 10".into());
        }

        let t = &self.sweep_temp;
        positive("sweep_temp.t_min", t.t_min)?;
        if !(t.t_max >= t.t_min && t.points >= 1) {
            return bad("sweep_temp needs t_max >= t_min and points >= 1".into());
        }
        non_negative("sweep_temp.relative_noise", t.relative_noise)?;
        non_negative("sweep_temp.dark_rate", t.dark_rate)?;

        let x = &self.distribution;
        positive("distribution.temperature", x.temperature)?;
        positive("distribution.duration", x.duration)?;
        non_negative("distribution.dark_rate", x.dark_rate)?;
        if x.bins == 0 {
            return bad("distribution.bins must be >= 1".into());
        }
        if let Some(ps) = &x.detection_probabilities {
            if ps.len() != self.modes.len() || ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return bad("distribution.detection_probabilities needs one value in [0, 1] per mode".into());
            }
        }
        if let Some((a, b)) = x.power_law_range {
            if !(a > 0.0 && b > a && b.is_finite()) {
                return bad("distribution.power_law_range must satisfy 0 < t_min < t_max".into());
            }
        }
        if let Some(w) = x.fano_window {
            positive("distribution.fano_window", w)?;
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be > 0, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be >= 0, got {v}")))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
