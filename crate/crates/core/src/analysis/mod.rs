//! Outcome purity and information metrics.
//!
//! For a diagonal POVM element `theta_n`, the outcome purity is
//! `sum_i theta_n(i)^2 / (sum_i theta_n(i))^2`, bounded by `1/M` (every photon
//! number contributes equally) and `1` (a projector). Its inverse estimates
//! how many photon numbers contribute to the outcome.
//!
//! Under a flat prior `p(i) = 1/M`, Bayes' rule gives the posterior
//! `p(i | n) = theta_n(i) / sum_j theta_n(j)`. The Shannon entropy of that
//! posterior is the information still missing after seeing `n`, and
//! `log2(M)` minus it is the information the outcome extracted.

mod fit;
mod uncertainty;

use serde::{Deserialize, Serialize};

pub use fit::{
    device_dark_prob, figures_of_merit, per_bin_dark_prob, Estimate, FiguresOfMerit, FitFamily, FitOptions,
};
pub use uncertainty::uncertainty_bars;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::povm::{DiagonalPovm, PovmSet};

/// Posterior terms below this are dropped from entropy sums.
const ENTROPY_FLOOR: f64 = 1e-300;

/// Slack allowed when checking `missing <= log2(M)`.
const INFO_SLACK: f64 = 1e-9;

fn checked_trace(povm: &DiagonalPovm) -> Result<f64> {
    let trace = povm.trace();
    if trace > 0.0 {
        Ok(trace)
    } else {
        Err(Error::ZeroOutcome(povm.outcome_index))
    }
}

/// Outcome purity `Tr(pi^2) / Tr(pi)^2` of a diagonal element.
pub fn purity(povm: &DiagonalPovm) -> Result<f64> {
    let trace = checked_trace(povm)?;
    let square: f64 = povm.weights.iter().map(|w| w * w).collect::<CompensatedSum>().value();
    Ok(square / (trace * trace))
}

/// Estimated number of photon numbers contributing to the outcome, `1 / purity`.
pub fn effective_states(povm: &DiagonalPovm) -> Result<f64> {
    purity(povm).map(f64::recip)
}

/// Flat-prior posterior `p(i | n)` over photon numbers `0..M`.
pub fn posterior(set: &PovmSet, n: usize) -> Result<Vec<f64>> {
    let povm = set
        .outcome(n)
        .ok_or_else(|| Error::Shape(format!("outcome {n} out of range")))?;
    let trace = checked_trace(povm)?;
    Ok(povm.weights.iter().map(|w| w / trace).collect())
}

/// Shannon entropy of a probability vector in bits, with `0 log 0 = 0`.
pub fn missing_info(posterior: &[f64]) -> f64 {
    let h = posterior
        .iter()
        .filter(|&&p| p > ENTROPY_FLOOR)
        .map(|&p| -p * p.log2())
        .collect::<CompensatedSum>()
        .value();
    h.max(0.0)
}

/// Information content of a flat prior over `M` photon numbers, `log2(M)`.
pub fn total_info(dimension: usize) -> f64 {
    (dimension as f64).log2()
}

/// Bits extracted by an outcome that leaves `missing` bits of uncertainty.
pub fn extracted_info(missing: f64, dimension: usize) -> Result<f64> {
    if dimension == 0 {
        return Err(Error::Range("dimension must be positive".into()));
    }
    let total = total_info(dimension);
    if !(missing >= -INFO_SLACK && missing <= total + INFO_SLACK) {
        return Err(Error::Range(format!(
            "missing information {missing} outside [0, log2({dimension}) = {total}]"
        )));
    }
    Ok((total - missing).max(0.0))
}

/// Per-outcome summary used for reports and plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMetrics {
    pub outcome_index: usize,
    pub purity: f64,
    pub effective_states: f64,
    pub missing_bits: f64,
    pub extracted_bits: f64,
}

/// Metrics for one outcome of `set`.
pub fn outcome_metrics(set: &PovmSet, n: usize) -> Result<OutcomeMetrics> {
    let povm = set
        .outcome(n)
        .ok_or_else(|| Error::Shape(format!("outcome {n} out of range")))?;
    let purity = purity(povm)?;
    let post = posterior(set, n)?;
    let missing = missing_info(&post);
    Ok(OutcomeMetrics {
        outcome_index: n,
        purity,
        effective_states: purity.recip(),
        missing_bits: missing,
        extracted_bits: extracted_info(missing, set.dimension())?,
    })
}

/// Metrics for every outcome; outcomes that never occur yield `None`.
pub fn all_outcome_metrics(set: &PovmSet) -> Vec<Option<OutcomeMetrics>> {
    (0..set.num_outcomes())
        .map(|n| match outcome_metrics(set, n) {
            Ok(m) => Some(m),
            Err(Error::ZeroOutcome(_)) => None,
            Err(e) => {
                log::warn!("outcome {n}: {e}");
                None
            }
        })
        .collect()
}
