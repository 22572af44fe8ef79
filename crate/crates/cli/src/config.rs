//! Run configuration.
//!
//! Values come from built-in defaults, then the TOML file given with
//! `--config`, then command-line flags. The configuration hash is taken
//! over the fully resolved configuration, so every override is reflected
//! in it. The output directory is not part of the hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sfwm_core::array::{DEFAULT_GROUPS, DEFAULT_SOURCE_COUNT, TARGET_SIGNAL_STD};
use sfwm_core::dispersion::SellmeierModel;
use sfwm_core::montecarlo::{
    DetectionConfig, DEFAULT_COUPLING_EFFICIENCY, DEFAULT_DARK_RATE, DEFAULT_DETECTOR_EFFICIENCY, DEFAULT_REP_RATE,
};
use sfwm_core::phasematch::WaveguideSpec;
use sfwm_core::report::config_hash;
use sfwm_core::spectrum::{GridConfig, PumpEnvelope};
use sfwm_core::tmsv::{CalibrationPreset, PumpCalibration, DEFAULT_POWER_RANGE_MW};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    pub dispersion: DispersionSection,
    pub waveguide: WaveguideSection,
    pub pump: PumpSection,
    pub grid: GridSection,
    pub detection: DetectionSection,
    pub perturbation: PerturbationSection,
    pub hbt: HbtSection,
    pub power_scan: PowerScanSection,
    pub hom: HomSection,
    pub chip: ChipSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionSection {
    /// Sellmeier coefficient file; the bundled fused-silica model when absent.
    pub sellmeier_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveguideSection {
    pub delta_n: f64,
    pub length_mm: f64,
    pub pump_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpSection {
    pub bandwidth_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub points: usize,
    pub half_span_pump_widths: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    pub rep_rate_hz: f64,
    pub coupling_efficiency: f64,
    pub detector_efficiency: f64,
    pub dark_rate_hz: f64,
    pub coincidence_window_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSection {
    pub eta_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    /// `squeezing-anchor` or `gsi-anchor`; ignored when `kappa_per_mw` is
    /// set. Each section has its own default preset.
    pub preset: Option<String>,
    pub kappa_per_mw: Option<f64>,
    pub power_min_mw: f64,
    pub power_max_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HbtSection {
    pub powers_mw: Vec<f64>,
    pub n_pulses: u64,
    pub calibration: CalibrationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerScanSection {
    pub powers_mw: Vec<f64>,
    pub n_pulses: u64,
    pub calibration: CalibrationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomSection {
    pub pump_power_mw: f64,
    pub half_points: usize,
    pub stride: usize,
    pub n_pulses_per_point: u64,
    pub splitter_ratio: f64,
    /// Chip source ids; both absent means two copies of the nominal source.
    pub source_a: Option<usize>,
    pub source_b: Option<usize>,
    pub calibration: CalibrationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipSection {
    pub sources: usize,
    /// Calibrated to `target_signal_std_nm` when absent.
    pub eta_sigma: Option<f64>,
    pub target_signal_std_nm: f64,
    pub groups: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: PathBuf::from("out"),
            dispersion: DispersionSection::default(),
            waveguide: WaveguideSection::default(),
            pump: PumpSection::default(),
            grid: GridSection::default(),
            detection: DetectionSection::default(),
            perturbation: PerturbationSection::default(),
            hbt: HbtSection::default(),
            power_scan: PowerScanSection::default(),
            hom: HomSection::default(),
            chip: ChipSection::default(),
        }
    }
}

impl Default for WaveguideSection {
    fn default() -> Self {
        let spec = WaveguideSpec::default();
        Self {
            delta_n: spec.delta_n,
            length_mm: spec.length * 1e3,
            pump_nm: spec.pump_wavelength * 1e9,
        }
    }
}

impl Default for PumpSection {
    fn default() -> Self {
        Self {
            bandwidth_nm: PumpEnvelope::default().bandwidth_fwhm * 1e9,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridConfig::default();
        Self {
            points: g.points_s,
            half_span_pump_widths: g.half_span_pump_widths,
        }
    }
}

impl Default for DetectionSection {
    fn default() -> Self {
        Self {
            rep_rate_hz: DEFAULT_REP_RATE,
            coupling_efficiency: DEFAULT_COUPLING_EFFICIENCY,
            detector_efficiency: DEFAULT_DETECTOR_EFFICIENCY,
            dark_rate_hz: DEFAULT_DARK_RATE,
            coincidence_window_ns: 1.0,
        }
    }
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self {
            eta_max: 0.2,
            points: 101,
        }
    }
}

impl CalibrationSection {
    pub fn resolve(&self, default_preset: CalibrationPreset) -> Result<PumpCalibration, CliError> {
        let range = (self.power_min_mw, self.power_max_mw);
        let kappa = match (self.kappa_per_mw, &self.preset) {
            (Some(k), _) => k,
            (None, Some(name)) => PumpCalibration::preset(CalibrationPreset::parse(name)?).kappa,
            (None, None) => PumpCalibration::preset(default_preset).kappa,
        };
        Ok(PumpCalibration::new(kappa, range)?)
    }
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            preset: None,
            kappa_per_mw: None,
            power_min_mw: DEFAULT_POWER_RANGE_MW.0,
            power_max_mw: DEFAULT_POWER_RANGE_MW.1,
        }
    }
}

impl HbtSection {
    pub const PRESET: CalibrationPreset = CalibrationPreset::CrossCorrelationAnchor;
}

impl Default for HbtSection {
    fn default() -> Self {
        Self {
            powers_mw: (1..=10).map(|k| 2.0 * k as f64).collect(),
            n_pulses: 100_000_000,
            calibration: CalibrationSection::default(),
        }
    }
}

impl PowerScanSection {
    pub const PRESET: CalibrationPreset = CalibrationPreset::SqueezingAnchor;
}

impl Default for PowerScanSection {
    fn default() -> Self {
        Self {
            powers_mw: (1..=15).map(|k| 10.0 * k as f64).collect(),
            n_pulses: 10_000_000,
            calibration: CalibrationSection::default(),
        }
    }
}

impl HomSection {
    pub const PRESET: CalibrationPreset = CalibrationPreset::CrossCorrelationAnchor;
}

impl Default for HomSection {
    fn default() -> Self {
        Self {
            pump_power_mw: 10.0,
            half_points: 15,
            stride: 5,
            n_pulses_per_point: 100_000_000,
            splitter_ratio: 0.5,
            source_a: None,
            source_b: None,
            calibration: CalibrationSection::default(),
        }
    }
}

impl Default for ChipSection {
    fn default() -> Self {
        Self {
            sources: DEFAULT_SOURCE_COUNT,
            eta_sigma: None,
            target_signal_std_nm: TARGET_SIGNAL_STD * 1e9,
            groups: DEFAULT_GROUPS,
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the file at `path`. Relative paths inside the
    /// file are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if let Some(file) = &cfg.dispersion.sellmeier_file {
            if file.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.dispersion.sellmeier_file = Some(base.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn dispersion_model(&self) -> Result<SellmeierModel, CliError> {
        match &self.dispersion.sellmeier_file {
            None => Ok(SellmeierModel::fused_silica()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(SellmeierModel::from_key_value_str(&text)?)
            }
        }
    }

    /// SHA-256 over the resolved configuration and dispersion coefficients.
    pub fn hash(&self, model: &SellmeierModel) -> Result<String, CliError> {
        let text = toml::to_string(self).map_err(|e| CliError::Usage(format!("cannot serialise config: {e}")))?;
        Ok(config_hash(&format!(
            "{text}\n# dispersion {:?} {:?}\n",
            model.terms(),
            model.valid_range_um()
        )))
    }

    pub fn waveguide_spec(&self) -> WaveguideSpec {
        WaveguideSpec {
            delta_n: self.waveguide.delta_n,
            length: self.waveguide.length_mm * 1e-3,
            pump_wavelength: self.waveguide.pump_nm * 1e-9,
            ..WaveguideSpec::default()
        }
    }

    pub fn pump_envelope(&self) -> Result<PumpEnvelope, CliError> {
        Ok(PumpEnvelope::new(self.waveguide.pump_nm * 1e-9, self.pump.bandwidth_nm * 1e-9)?)
    }

    pub fn grid_config(&self) -> GridConfig {
        GridConfig {
            half_span_pump_widths: self.grid.half_span_pump_widths,
            ..GridConfig::square(self.grid.points)
        }
    }

    pub fn detection(&self, n_pulses: u64) -> DetectionConfig {
        let d = &self.detection;
        DetectionConfig {
            rep_rate: d.rep_rate_hz,
            coincidence_window: d.coincidence_window_ns * 1e-9,
            n_pulses,
            seed: self.seed,
            ..DetectionConfig::default()
        }
        .with_efficiency_factors(d.coupling_efficiency, d.detector_efficiency)
        .with_dark_rate(d.dark_rate_hz)
    }
}
