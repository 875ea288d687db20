use serde::{Deserialize, Serialize};

use super::{check_dimension, check_probability, noise};
use crate::error::{Error, Result};
use crate::numeric::{ln_binomial, CompensatedSum};
use crate::povm::PovmSet;

/// Largest supported number of bins.
pub const MAX_BINS: usize = 64;

/// Light split evenly over `bins` click detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqualSplitModel {
    pub bins: usize,
    /// Probability that an incident photon is detected at all.
    pub efficiency: f64,
    /// Per-bin probability of a spurious click in one shot.
    #[serde(default)]
    pub dark_prob: f64,
    /// Per-click probability of inducing one extra click in an idle bin.
    #[serde(default)]
    pub crosstalk_prob: f64,
}

impl EqualSplitModel {
    /// Noiseless model.
    pub fn new(bins: usize, efficiency: f64) -> Self {
        Self {
            bins,
            efficiency,
            dark_prob: 0.0,
            crosstalk_prob: 0.0,
        }
    }

    pub fn with_noise(mut self, dark_prob: f64, crosstalk_prob: f64) -> Self {
        self.dark_prob = dark_prob;
        self.crosstalk_prob = crosstalk_prob;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || self.bins > MAX_BINS {
            return Err(Error::Parameter(format!(
                "bins = {} outside 1..={MAX_BINS}",
                self.bins
            )));
        }
        check_probability("efficiency", self.efficiency, true)?;
        check_probability("dark_prob", self.dark_prob, false)?;
        check_probability("crosstalk_prob", self.crosstalk_prob, false)
    }
}

/// Noiseless click probability `p(k clicks | n photons)` from the
/// inclusion-exclusion closed form
/// `C(N,k) sum_j (-1)^j C(k,j) (1 - eta + eta (k-j)/N)^n`.
///
/// The alternating sum loses relative precision deep in the tails; the POVM
/// builder uses the equivalent occupancy recurrence instead.
pub fn equal_split_click_probability(bins: usize, efficiency: f64, photons: u64, clicks: usize) -> f64 {
    if clicks > bins {
        return 0.0;
    }
    let n_bins = bins as u64;
    let k = clicks as u64;
    let lead = ln_binomial(n_bins, k);
    let mut acc = CompensatedSum::new();
    for j in 0..=k {
        let base = 1.0 - efficiency + efficiency * (k - j) as f64 / bins as f64;
        let power = if photons == 0 {
            1.0
        } else if base <= 0.0 {
            0.0
        } else {
            (photons as f64 * base.ln()).exp()
        };
        let term = (lead + ln_binomial(k, j)).exp() * power;
        if j % 2 == 0 {
            acc.add(term);
        } else {
            acc.add(-term);
        }
    }
    acc.value()
}

/// Exact POVM of an equal-split detector on photon numbers `0..dimension`.
///
/// Photons are added one at a time: each is lost with probability `1 - eta`,
/// otherwise it lands in a uniformly chosen bin and creates a new click when
/// that bin was still idle. Cross-talk and then dark counts are applied in
/// outcome space.
pub fn equal_split_povm(model: &EqualSplitModel, dimension: usize) -> Result<PovmSet> {
    model.validate()?;
    check_dimension(dimension)?;
    let bins = model.bins;
    let eta = model.efficiency;
    let outcomes = bins + 1;

    let mut rows = vec![vec![0.0; dimension]; outcomes];
    let mut state = vec![0.0; outcomes];
    let mut next = vec![0.0; outcomes];
    state[0] = 1.0;
    for i in 0..dimension {
        for (k, row) in rows.iter_mut().enumerate() {
            row[i] = state[k];
        }
        for k in 0..outcomes {
            let stay = 1.0 - eta + eta * k as f64 / bins as f64;
            let mut v = state[k] * stay;
            if k > 0 {
                v += state[k - 1] * eta * (bins - k + 1) as f64 / bins as f64;
            }
            next[k] = v;
        }
        let total = crate::numeric::sum(next.iter().copied());
        for (s, n) in state.iter_mut().zip(&next) {
            *s = n / total;
        }
    }

    let base = PovmSet::from_rows(rows)?;
    let with_xtalk = noise::apply_crosstalk(&base, model.crosstalk_prob, bins)?;
    noise::apply_dark_counts(&with_xtalk, model.dark_prob, bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_photons_on_four_ideal_bins() {
        let set = equal_split_povm(&EqualSplitModel::new(4, 1.0), 3).unwrap();
        assert!((set.weight(1, 2) - 0.25).abs() < 1e-15);
        assert!((set.weight(2, 2) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn single_photon_survives_with_efficiency() {
        let set = equal_split_povm(&EqualSplitModel::new(4, 0.5), 2).unwrap();
        assert!((set.weight(0, 1) - 0.5).abs() < 1e-15);
        assert!((set.weight(1, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn recurrence_matches_closed_form() {
        for &(bins, eta) in &[(4usize, 0.72), (8, 0.69), (3, 0.25), (1, 0.9)] {
            let set = equal_split_povm(&EqualSplitModel::new(bins, eta), 200).unwrap();
            for i in 0..200 {
                for k in 0..=bins {
                    let cf = equal_split_click_probability(bins, eta, i as u64, k);
                    assert!(
                        (set.weight(k, i) - cf).abs() < 1e-12,
                        "N={bins} eta={eta} i={i} k={k}: {} vs {cf}",
                        set.weight(k, i)
                    );
                }
            }
        }
    }

    #[test]
    fn complete_and_saturating() {
        let set = equal_split_povm(&EqualSplitModel::new(4, 0.72), 5000).unwrap();
        assert!(set.validate(1e-12).is_empty());
        let top = &set.outcome(4).unwrap().weights;
        assert!(top.windows(2).all(|w| w[1] >= w[0]));
        assert!(top[4999] > 1.0 - 1e-12);
    }

    #[test]
    fn bad_parameters() {
        assert!(equal_split_povm(&EqualSplitModel::new(0, 0.5), 10).is_err());
        assert!(equal_split_povm(&EqualSplitModel::new(65, 0.5), 10).is_err());
        assert!(equal_split_povm(&EqualSplitModel::new(4, -0.1), 10).is_err());
        assert!(equal_split_povm(&EqualSplitModel::new(4, 0.5).with_noise(1.0, 0.0), 10).is_err());
        assert!(matches!(
            equal_split_povm(&EqualSplitModel::new(4, 0.5), 1),
            Err(Error::Dimension(_))
        ));
    }
}
