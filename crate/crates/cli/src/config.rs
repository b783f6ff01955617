//! TOML run configuration. Top-level keys hold output settings, one table
//! per subcommand holds its parameters. Unknown keys are rejected.
//! Precedence: command-line flag, then file, then preset, then default.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    Fock,
    Both,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub engine: Option<Engine>,
    pub jobs: Option<usize>,
    pub timing: Option<bool>,
    #[serde(default)]
    pub teleamp: TeleampSection,
    #[serde(default, rename = "success-scan")]
    pub success_scan: SuccessSection,
    #[serde(default, rename = "qubit-map")]
    pub qubit_map: QubitSection,
    #[serde(default)]
    pub qkd: QkdSection,
    #[serde(default)]
    pub usd: UsdSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleampSection {
    pub preset: Option<String>,
    pub table1: Option<bool>,
    pub alpha: Option<f64>,
    pub gain: Option<f64>,
    pub r_a: Option<f64>,
    pub r_b: Option<f64>,
    pub r_e: Option<f64>,
    pub herald: Option<String>,
    pub input: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessSection {
    pub preset: Option<String>,
    pub r_e: Option<f64>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub points: Option<usize>,
    pub gains: Option<Vec<f64>>,
    pub p4_gain: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    pub preset: Option<String>,
    pub alpha: Option<f64>,
    pub alpha_out: Option<f64>,
    pub r_b: Option<f64>,
    pub r_e: Option<f64>,
    pub grid: Option<String>,
    pub points: Option<usize>,
    pub n_theta: Option<usize>,
    pub n_phi: Option<usize>,
    pub ideal: Option<bool>,
    pub detect_c: Option<bool>,
    pub sv_transmission: Option<f64>,
    pub opo_escape: Option<f64>,
    pub tap_ratio: Option<f64>,
    pub propagation: Option<f64>,
    pub apd_efficiency: Option<f64>,
    pub surface: Option<bool>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_points: Option<usize>,
    pub alpha_out_min: Option<f64>,
    pub alpha_out_max: Option<f64>,
    pub alpha_out_points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QkdSection {
    pub preset: Option<String>,
    pub alpha_in_sq: Option<f64>,
    pub xi: Option<f64>,
    pub relay_fraction: Option<f64>,
    pub r_b: Option<f64>,
    pub nu: Option<f64>,
    pub eta_b: Option<f64>,
    pub l_max: Option<f64>,
    pub l_step: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsdSection {
    pub arity: Option<usize>,
    pub r_e: Option<f64>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub points: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }
}

/// Evenly spaced grid including both ends; one point gives `[hi]`.
pub fn grid(lo: f64, hi: f64, points: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if points == 0 {
        return Err(config_err(format!("{what}: need at least one grid point")));
    }
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(config_err(format!("{what}: bad range [{lo}, {hi}]")));
    }
    Ok(teleamp_core::math::linspace(lo, hi, points))
}
