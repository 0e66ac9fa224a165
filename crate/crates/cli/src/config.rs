use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use polyscale::calibration::CalibrationConfig;
use polyscale::corpus::{LoadOptions, DEFAULT_LANGUAGES};
use polyscale::eval::{ExperimentConfig, SplitSpec, TuningGrid};
use polyscale::hiermodel::ModelConfig;
use polyscale::synth::SynthConfig;

use crate::CliError;

/// Everything a run can be configured with; every table is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    /// Accepted corpus language tags; the ten CMP languages when unset.
    pub languages: Option<Vec<String>>,
    /// Coding scheme file; the bundled scheme when unset.
    pub scheme: Option<PathBuf>,
    pub exclude_codes: Vec<String>,
    pub model: ModelConfig,
    pub calibration: CalibrationConfig,
    pub sentence_split: SplitSpec,
    pub calibration_split: SplitSpec,
    pub tuning: TuningGrid,
    pub synth: SynthConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        Self {
            languages: None,
            scheme: None,
            exclude_codes: e.exclude_codes,
            model: e.model,
            calibration: e.calibration,
            sentence_split: e.sentence_split,
            calibration_split: e.calibration_split,
            tuning: TuningGrid::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.model.seed = s;
            self.calibration.seed = s;
            self.sentence_split.seed = s;
            self.calibration_split.seed = s;
            self.synth.seed = s;
        }
        self
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            model: self.model.clone(),
            calibration: self.calibration.clone(),
            sentence_split: self.sentence_split.clone(),
            calibration_split: self.calibration_split.clone(),
            exclude_codes: self.exclude_codes.clone(),
        }
    }

    pub fn load_options(&self) -> LoadOptions {
        let langs: BTreeSet<String> = match &self.languages {
            Some(l) => l.iter().cloned().collect(),
            None => DEFAULT_LANGUAGES.iter().map(|s| s.to_string()).collect(),
        };
        LoadOptions { languages: langs }
    }
}
