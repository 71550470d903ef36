//! Optional TOML defaults. Flags given on the command line win.
//!
//! ```toml
//! seed = 7
//! threads = 4
//! format = "csv"
//!
//! [localize]
//! strategy = "radial-near-midpoint"
//!
//! [equi_check]
//! lambda = 0.5
//! weights = { cls = 2.0, l1 = 5.0, giou = 2.0 }
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;
use crate::Format;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    #[serde(default)]
    pub calibrate: CalibrateConfig,
    #[serde(default)]
    pub localize: LocalizeConfig,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub equi_check: EquiCheckConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub initial_focal: Option<f64>,
    pub max_iterations: Option<usize>,
    pub image_side: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizeConfig {
    pub strategy: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub strategy: Option<String>,
    pub score_cutoff: Option<f64>,
    pub calibration: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub images: Option<usize>,
    pub persons: Option<usize>,
    pub altitude: Option<f64>,
    pub min_distance: Option<f64>,
    pub max_distance: Option<f64>,
    pub height: Option<[f64; 2]>,
    pub radius: Option<[f64; 2]>,
    pub image_side: Option<f64>,
    pub allow_overlap: Option<bool>,
    pub split: Option<String>,
    pub predictions: Option<bool>,
    pub center_sigma: Option<f64>,
    pub size_sigma: Option<f64>,
    pub score: Option<[f64; 2]>,
    pub miss_rate: Option<f64>,
    pub fp_rate: Option<f64>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub cls: Option<f64>,
    pub l1: Option<f64>,
    pub giou: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquiCheckConfig {
    pub lambda: Option<f64>,
    #[serde(default)]
    pub weights: WeightsConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::error::io_error(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}
