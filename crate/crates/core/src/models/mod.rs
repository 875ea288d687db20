//! Forward models of multiplexed click detectors.
//!
//! Two architectures are covered:
//!
//! - [`EqualSplitModel`]: light divided evenly across `N` click detectors
//!   (spatial or temporal multiplexing trees, pixel arrays).
//! - [`LogLoopModel`]: a fibre loop that couples out a fraction `R` of the
//!   circulating light into successive time bins, giving a logarithmic
//!   response.
//!
//! Both produce exact [`PovmSet`]s by recurrences over incident photons.
//! Dark counts and cross-talk act afterwards on outcome space (see
//! [`noise`]). [`monte_carlo`] simulates the same physics photon by photon
//! and serves as an independent check of the closed forms.

pub mod equal_split;
pub mod log_loop;
pub mod monte_carlo;
pub mod noise;

use serde::{Deserialize, Serialize};

pub use equal_split::{equal_split_click_probability, equal_split_povm, EqualSplitModel};
pub use log_loop::{loop_povm, LogLoopModel};
pub use monte_carlo::monte_carlo_povm;
pub use noise::{apply_crosstalk, apply_dark_counts};

use crate::error::{Error, Result};
use crate::povm::PovmSet;

/// Any supported detector model, as read from a model description file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DetectorModel {
    EqualSplit(EqualSplitModel),
    LogLoop(LogLoopModel),
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            DetectorModel::EqualSplit(m) => m.validate(),
            DetectorModel::LogLoop(m) => m.validate(),
        }
    }

    /// Number of click bins; the POVM has `bins + 1` outcomes.
    pub fn bins(&self) -> usize {
        match self {
            DetectorModel::EqualSplit(m) => m.bins,
            DetectorModel::LogLoop(m) => m.bins,
        }
    }

    pub fn dark_prob(&self) -> f64 {
        match self {
            DetectorModel::EqualSplit(m) => m.dark_prob,
            DetectorModel::LogLoop(m) => m.dark_prob,
        }
    }

    pub fn crosstalk_prob(&self) -> f64 {
        match self {
            DetectorModel::EqualSplit(m) => m.crosstalk_prob,
            DetectorModel::LogLoop(m) => m.crosstalk_prob,
        }
    }

    /// Exact POVM on photon numbers `0..dimension`.
    pub fn povm(&self, dimension: usize) -> Result<PovmSet> {
        match self {
            DetectorModel::EqualSplit(m) => equal_split_povm(m, dimension),
            DetectorModel::LogLoop(m) => loop_povm(m, dimension),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: DetectorModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

impl From<EqualSplitModel> for DetectorModel {
    fn from(m: EqualSplitModel) -> Self {
        DetectorModel::EqualSplit(m)
    }
}

impl From<LogLoopModel> for DetectorModel {
    fn from(m: LogLoopModel) -> Self {
        DetectorModel::LogLoop(m)
    }
}

pub(crate) fn check_probability(name: &str, value: f64, allow_one: bool) -> Result<()> {
    let ok = if allow_one {
        (0.0..=1.0).contains(&value)
    } else {
        (0.0..1.0).contains(&value)
    };
    if ok {
        Ok(())
    } else {
        let hi = if allow_one { "]" } else { ")" };
        Err(Error::Parameter(format!("{name} = {value} outside [0, 1{hi}")))
    }
}

pub(crate) fn check_dimension(dimension: usize) -> Result<()> {
    if dimension < 2 {
        return Err(Error::Dimension(format!(
            "model dimension {dimension} must be at least 2"
        )));
    }
    Ok(())
}
