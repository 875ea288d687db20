//! Diagonal POVM data model.
//!
//! A phase-insensitive photon counter is fully described by the diagonal of
//! each of its POVM elements in the Fock basis: `theta_n(i)` is the
//! probability of outcome `n` given `i` incident photons. A [`PovmSet`] is the
//! dense `K x M` table of those probabilities, stored one outcome per row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on the saturation of the largest outcome at the
/// truncation edge.
pub const DEFAULT_SATURATION_EPSILON: f64 = 0.01;

/// Diagonal of one POVM element: `weights[i] = p(n | i photons)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalPovm {
    pub outcome_index: usize,
    pub weights: Vec<f64>,
}

impl DiagonalPovm {
    pub fn new(outcome_index: usize, weights: Vec<f64>) -> Self {
        Self {
            outcome_index,
            weights,
        }
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    /// Trace of the element, `sum_i theta_n(i)`.
    pub fn trace(&self) -> f64 {
        crate::numeric::sum(self.weights.iter().copied())
    }
}

/// A full detector description: `K` outcomes over photon numbers `0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmSet {
    dimension: usize,
    outcomes: Vec<DiagonalPovm>,
}

/// One violated invariant found by [`PovmSet::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewOutcomes(usize),
    OutOfRange {
        outcome: usize,
        photon_number: usize,
        value: f64,
    },
    Completeness {
        photon_number: usize,
        sum: f64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::TooFewOutcomes(k) => write!(f, "only {k} outcome(s), need at least 2"),
            Violation::OutOfRange {
                outcome,
                photon_number,
                value,
            } => write!(
                f,
                "theta_{outcome}({photon_number}) = {value} outside [0, 1]"
            ),
            Violation::Completeness { photon_number, sum } => {
                write!(f, "outcomes sum to {sum} at photon number {photon_number}")
            }
        }
    }
}

impl PovmSet {
    /// Builds a set from one weight row per outcome.
    ///
    /// Rows must share a common non-zero length and hold finite values.
    /// Nonnegativity and completeness are not enforced here; see [`validate`](Self::validate).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Shape("POVM set needs at least one outcome".into()))?;
        let dimension = first.len();
        if dimension == 0 {
            return Err(Error::Dimension("POVM dimension must be at least 1".into()));
        }
        for (n, row) in rows.iter().enumerate() {
            if row.len() != dimension {
                return Err(Error::Shape(format!(
                    "outcome {n} has {} weights, expected {dimension}",
                    row.len()
                )));
            }
            if let Some(i) = row.iter().position(|w| !w.is_finite()) {
                return Err(Error::Format(format!(
                    "non-finite weight at outcome {n}, photon number {i}"
                )));
            }
        }
        let outcomes = rows
            .into_iter()
            .enumerate()
            .map(|(n, w)| DiagonalPovm::new(n, w))
            .collect();
        Ok(Self {
            dimension,
            outcomes,
        })
    }

    /// Hilbert-space truncation `M`.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of outcomes `K`.
    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[DiagonalPovm] {
        &self.outcomes
    }

    pub fn outcome(&self, n: usize) -> Option<&DiagonalPovm> {
        self.outcomes.get(n)
    }

    pub fn weight(&self, n: usize, i: usize) -> f64 {
        self.outcomes[n].weights[i]
    }

    /// The `K` outcome probabilities for `i` incident photons.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.weights[i]).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.outcomes.iter().map(|o| o.weights.clone()).collect()
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.outcomes.into_iter().map(|o| o.weights).collect()
    }

    /// Lists every violated invariant: at least two outcomes, weights in
    /// `[0, 1]` and columns summing to one, each within `tol`.
    pub fn validate(&self, tol: f64) -> Vec<Violation> {
        let mut report = Vec::new();
        if self.outcomes.len() < 2 {
            report.push(Violation::TooFewOutcomes(self.outcomes.len()));
        }
        for o in &self.outcomes {
            for (i, &w) in o.weights.iter().enumerate() {
                if w < -tol || w > 1.0 + tol {
                    report.push(Violation::OutOfRange {
                        outcome: o.outcome_index,
                        photon_number: i,
                        value: w,
                    });
                }
            }
        }
        for i in 0..self.dimension {
            let s = crate::numeric::sum(self.outcomes.iter().map(|o| o.weights[i]));
            if (s - 1.0).abs() > tol {
                report.push(Violation::Completeness {
                    photon_number: i,
                    sum: s,
                });
            }
        }
        report
    }

    /// Pads the set to `target` photon numbers, assuming the largest outcome
    /// has saturated: padded columns are `(0, ..., 0, 1)`.
    ///
    /// Fails with [`Error::Saturation`] when padding is needed and
    /// `theta_{K-1}(M-1) < 1 - epsilon`.
    pub fn extend_to(&self, target: usize, epsilon: f64) -> Result<Self> {
        if target < self.dimension {
            return Err(Error::Dimension(format!(
                "cannot extend dimension {} down to {target}",
                self.dimension
            )));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::Parameter(format!(
                "saturation epsilon {epsilon} outside [0, 1)"
            )));
        }
        if target == self.dimension {
            return Ok(self.clone());
        }
        let top = self.outcomes.len() - 1;
        let edge = self.dimension - 1;
        let weight = self.outcomes[top].weights[edge];
        if weight < 1.0 - epsilon {
            return Err(Error::Saturation {
                weight,
                photon_number: edge,
                epsilon,
            });
        }
        let pad = target - self.dimension;
        let outcomes = self
            .outcomes
            .iter()
            .map(|o| {
                let fill = if o.outcome_index == top { 1.0 } else { 0.0 };
                let mut w = o.weights.clone();
                w.extend(std::iter::repeat_n(fill, pad));
                DiagonalPovm::new(o.outcome_index, w)
            })
            .collect();
        Ok(Self {
            dimension: target,
            outcomes,
        })
    }

    /// Drops photon numbers `target..M`.
    pub fn truncate_to(&self, target: usize) -> Result<Self> {
        if target < 2 {
            return Err(Error::Dimension(format!(
                "truncation dimension {target} must be at least 2"
            )));
        }
        if target > self.dimension {
            return Err(Error::Dimension(format!(
                "cannot truncate dimension {} up to {target}",
                self.dimension
            )));
        }
        let outcomes = self
            .outcomes
            .iter()
            .map(|o| DiagonalPovm::new(o.outcome_index, o.weights[..target].to_vec()))
            .collect();
        Ok(Self {
            dimension: target,
            outcomes,
        })
    }

    /// Brings the set to exactly `target` photon numbers, extending with the
    /// saturation rule or truncating as needed.
    pub fn resize_to(&self, target: usize, epsilon: f64) -> Result<Self> {
        if target >= self.dimension {
            self.extend_to(target, epsilon)
        } else {
            self.truncate_to(target)
        }
    }
}
