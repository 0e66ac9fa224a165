use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;
use crate::pslengine::Program;

use super::CalibrationError;

/// `2 / (1 + e^-v) - 1`: 0 at 0, increasing, bounded by 1.
pub fn squash(v: f64) -> Result<f64, CalibrationError> {
    if v.is_nan() || v < 0.0 {
        return Err(CalibrationError::NegativeInput(v));
    }
    Ok(2.0 / (1.0 + (-v).exp()) - 1.0)
}

/// Location-weighted share of RIGHT sentences. Sentence `l` (1-based)
/// weighs `ln(l + 1)`.
pub fn lw_right_left_ratio(polarities: &[Polarity]) -> Result<f64, CalibrationError> {
    if polarities.is_empty() {
        return Err(CalibrationError::EmptyDocument);
    }
    let mut weights = [0.0; 3];
    for (i, p) in polarities.iter().enumerate() {
        weights[p.index()] += ((i + 2) as f64).ln();
    }
    let right = weights[Polarity::Right.index()];
    Ok(right / (weights[0] + weights[1] + weights[2]))
}

/// Rule families of the calibration program, keyed by the predicates that
/// identify them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Coal,
    Esim,
    Ploc,
    Temp,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [FeatureGroup::Coal, FeatureGroup::Esim, FeatureGroup::Ploc, FeatureGroup::Temp];

    pub fn predicates(self) -> &'static [&'static str] {
        match self {
            FeatureGroup::Coal => &["RegCoalition", "EUCoalition"],
            FeatureGroup::Esim => &["Similarity"],
            FeatureGroup::Ploc => &["LwRightLeftRatio"],
            FeatureGroup::Temp => &["PreviousManifesto"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Coal => "coal",
            FeatureGroup::Esim => "esim",
            FeatureGroup::Ploc => "ploc",
            FeatureGroup::Temp => "temp",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown feature group {s:?}"))
    }
}

/// Keeps the rules whose feature groups are all in `groups`.
pub fn restrict_program(program: &Program, groups: &[FeatureGroup]) -> Program {
    let dropped: Vec<&str> = FeatureGroup::ALL
        .into_iter()
        .filter(|g| !groups.contains(g))
        .flat_map(|g| g.predicates().iter().copied())
        .collect();
    program.without_predicates(&dropped)
}
