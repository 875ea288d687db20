//! Probe planning shared by the batch driver and the acceptance runs.
//!
//! A detector that saturates at photon number `s` is probed up to
//! `mu_max = 2 s`. One that does not saturate inside the comparison dimension
//! is probed up to the largest mean that still fits there. The probe count is
//! raised above [`DEFAULT_PROBE_COUNT`] when needed so the first nonzero
//! probe stays at or below [`MAX_FIRST_PROBE_MEAN`] photons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::povm::PovmSet;
use crate::probe::{adequate_dimension, max_adequate_mean, ProbeSet, DEFAULT_PROBE_COUNT};

/// Upper bound on the smallest nonzero probe mean of an automatic plan.
pub const MAX_FIRST_PROBE_MEAN: f64 = 1.2;

/// First photon number at which the largest outcome reaches `1 - epsilon`.
pub fn saturation_index(set: &PovmSet, epsilon: f64) -> Option<usize> {
    set.outcomes()
        .last()?
        .weights
        .iter()
        .position(|&w| w >= 1.0 - epsilon)
}

/// Quadratic probe grid parameters for one detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub mu_max: f64,
    pub count: usize,
}

impl ProbePlan {
    /// Automatic plan for a model POVM given at the comparison dimension.
    pub fn for_model(model: &PovmSet, epsilon: f64) -> Self {
        let ceiling = max_adequate_mean(model.dimension());
        let mu_max = match saturation_index(model, epsilon) {
            Some(s) => (2.0 * s.max(1) as f64).min(ceiling),
            None => ceiling,
        };
        let needed = (mu_max / MAX_FIRST_PROBE_MEAN).sqrt().ceil() as usize + 1;
        Self {
            mu_max,
            count: needed.max(DEFAULT_PROBE_COUNT),
        }
    }

    /// Replaces whichever fields are given.
    pub fn with_overrides(self, mu_max: Option<f64>, count: Option<usize>) -> Self {
        Self {
            mu_max: mu_max.unwrap_or(self.mu_max),
            count: count.unwrap_or(self.count),
        }
    }

    pub fn probes(&self) -> Result<ProbeSet> {
        ProbeSet::quadratic(self.mu_max, self.count)
    }

    /// Truncation-adequate reconstruction dimension, which must not exceed
    /// the comparison dimension.
    pub fn reconstruction_dimension(&self, comparison: usize) -> Result<usize> {
        let m = adequate_dimension(self.mu_max);
        if m > comparison {
            return Err(Error::Truncation {
                mean: self.mu_max,
                dimension: comparison,
                required: m,
            });
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{equal_split_povm, loop_povm, EqualSplitModel, LogLoopModel};

    #[test]
    fn saturating_detector_probed_to_twice_saturation() {
        let set = equal_split_povm(&EqualSplitModel::new(4, 0.72), 5000).unwrap();
        let s = saturation_index(&set, 0.01).unwrap();
        assert!(set.weight(4, s) >= 0.99 && set.weight(4, s - 1) < 0.99);
        let plan = ProbePlan::for_model(&set, 0.01);
        assert_eq!(plan.mu_max, 2.0 * s as f64);
        assert_eq!(plan.count, DEFAULT_PROBE_COUNT);
        assert!(plan.reconstruction_dimension(5000).unwrap() < 200);
    }

    #[test]
    fn unsaturated_detector_fills_the_dimension() {
        let set = loop_povm(&LogLoopModel::new(10, 0.44), 5000).unwrap();
        assert_eq!(saturation_index(&set, 0.01), None);
        let plan = ProbePlan::for_model(&set, 0.01);
        assert_eq!(plan.reconstruction_dimension(5000).unwrap(), 5000);
        let probes = plan.probes().unwrap();
        assert!(probes.means()[1] <= MAX_FIRST_PROBE_MEAN);
        assert!(plan.count > DEFAULT_PROBE_COUNT);
    }

    #[test]
    fn oversized_probe_is_rejected() {
        let plan = ProbePlan {
            mu_max: 200.0,
            count: 30,
        };
        assert!(matches!(plan.reconstruction_dimension(100), Err(Error::Truncation { .. })));
    }
}
