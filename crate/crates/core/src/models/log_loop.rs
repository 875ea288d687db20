use serde::{Deserialize, Serialize};

use super::{check_dimension, check_probability, noise};
use crate::error::{Error, Result};
use crate::povm::PovmSet;

pub const DEFAULT_OUT_COUPLING: f64 = 0.5;
pub const DEFAULT_LOOP_EFFICIENCY: f64 = 0.9;
/// The exact recurrence tracks every subset of occupied bins.
pub const MAX_LOOP_BINS: usize = 16;

fn default_out_coupling() -> f64 {
    DEFAULT_OUT_COUPLING
}

fn default_loop_efficiency() -> f64 {
    DEFAULT_LOOP_EFFICIENCY
}

/// Time-multiplexed loop detector with logarithmic out-coupling.
///
/// On each round trip a fraction `out_coupling` of the circulating light is
/// sent to the click detector, the rest survives the loop with probability
/// `loop_efficiency`. Photons still in the loop after `bins` passes are lost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogLoopModel {
    pub bins: usize,
    #[serde(default = "default_out_coupling")]
    pub out_coupling: f64,
    #[serde(default = "default_loop_efficiency")]
    pub loop_efficiency: f64,
    pub detector_efficiency: f64,
    #[serde(default)]
    pub dark_prob: f64,
    #[serde(default)]
    pub crosstalk_prob: f64,
}

impl LogLoopModel {
    /// Noiseless loop with the default out-coupling and loop efficiency.
    pub fn new(bins: usize, detector_efficiency: f64) -> Self {
        Self {
            bins,
            out_coupling: DEFAULT_OUT_COUPLING,
            loop_efficiency: DEFAULT_LOOP_EFFICIENCY,
            detector_efficiency,
            dark_prob: 0.0,
            crosstalk_prob: 0.0,
        }
    }

    pub fn with_loop(mut self, out_coupling: f64, loop_efficiency: f64) -> Self {
        self.out_coupling = out_coupling;
        self.loop_efficiency = loop_efficiency;
        self
    }

    pub fn with_noise(mut self, dark_prob: f64, crosstalk_prob: f64) -> Self {
        self.dark_prob = dark_prob;
        self.crosstalk_prob = crosstalk_prob;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 || self.bins > MAX_LOOP_BINS {
            return Err(Error::Parameter(format!(
                "loop bins = {} outside 2..={MAX_LOOP_BINS}",
                self.bins
            )));
        }
        if !(self.out_coupling > 0.0 && self.out_coupling <= 1.0) {
            return Err(Error::Parameter(format!(
                "out_coupling = {} outside (0, 1]",
                self.out_coupling
            )));
        }
        for (name, v) in [
            ("loop_efficiency", self.loop_efficiency),
            ("detector_efficiency", self.detector_efficiency),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Parameter(format!("{name} = {v} outside (0, 1]")));
            }
        }
        check_probability("dark_prob", self.dark_prob, false)?;
        check_probability("crosstalk_prob", self.crosstalk_prob, false)
    }

    /// Per-photon probability of a click attempt in each bin,
    /// `q_k = eta_det R ((1 - R) eta_loop)^(k-1)`.
    pub fn bin_probabilities(&self) -> Vec<f64> {
        let ratio = (1.0 - self.out_coupling) * self.loop_efficiency;
        (0..self.bins)
            .map(|k| self.detector_efficiency * self.out_coupling * ratio.powi(k as i32))
            .collect()
    }

    /// Probability that a single photon produces a click.
    pub fn single_photon_efficiency(&self) -> f64 {
        crate::numeric::sum(self.bin_probabilities())
    }
}

/// Exact POVM of the loop detector on photon numbers `0..dimension`.
///
/// Tracks the distribution over the set of occupied bins as photons are added
/// one at a time; the outcome is the number of occupied bins. Cross-talk and
/// then dark counts are applied in outcome space.
pub fn loop_povm(model: &LogLoopModel, dimension: usize) -> Result<PovmSet> {
    model.validate()?;
    check_dimension(dimension)?;
    let bins = model.bins;
    let q = model.bin_probabilities();
    let lost = (1.0 - crate::numeric::sum(q.iter().copied())).max(0.0);
    let states = 1usize << bins;

    // Probability that a photon leaves the occupied set unchanged.
    let stay: Vec<f64> = (0..states)
        .map(|s| {
            lost + (0..bins)
                .filter(|&k| s & (1 << k) != 0)
                .map(|k| q[k])
                .sum::<f64>()
        })
        .collect();
    let popcount: Vec<usize> = (0..states).map(|s| s.count_ones() as usize).collect();

    let mut rows = vec![vec![0.0; dimension]; bins + 1];
    let mut state = vec![0.0; states];
    let mut next = vec![0.0; states];
    state[0] = 1.0;
    for i in 0..dimension {
        let mut by_count = vec![crate::numeric::CompensatedSum::new(); bins + 1];
        for s in 0..states {
            by_count[popcount[s]].add(state[s]);
        }
        for (row, acc) in rows.iter_mut().zip(&by_count) {
            row[i] = acc.value();
        }
        for s in 0..states {
            let mut v = state[s] * stay[s];
            let mut rest = s;
            while rest != 0 {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                v += state[s & !(1 << k)] * q[k];
            }
            next[s] = v;
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
    fn full_out_coupling_is_single_bin() {
        let m = LogLoopModel::new(3, 1.0).with_loop(1.0, 0.7);
        let set = loop_povm(&m, 20).unwrap();
        assert_eq!(set.weight(0, 0), 1.0);
        for i in 1..20 {
            assert!((set.weight(1, i) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn one_photon_clicks_at_most_once() {
        let m = LogLoopModel::new(10, 0.9).with_loop(0.5, 0.9);
        let set = loop_povm(&m, 2).unwrap();
        let total = m.single_photon_efficiency();
        assert!((set.weight(1, 1) - total).abs() < 1e-14);
        assert!((set.weight(0, 1) - (1.0 - total)).abs() < 1e-14);
    }

    #[test]
    fn completeness_over_large_dimension() {
        let m = LogLoopModel::new(10, 0.44);
        let set = loop_povm(&m, 1000).unwrap();
        assert!(set.validate(1e-12).is_empty());
    }

    #[test]
    fn parameter_ranges() {
        assert!(LogLoopModel::new(1, 0.5).validate().is_err());
        assert!(LogLoopModel::new(17, 0.5).validate().is_err());
        assert!(LogLoopModel::new(4, 0.0).validate().is_err());
        assert!(LogLoopModel::new(4, 0.5).with_loop(0.0, 0.9).validate().is_err());
        assert!(LogLoopModel::new(4, 0.5).with_loop(0.5, 1.2).validate().is_err());
        assert!(loop_povm(&LogLoopModel::new(4, 0.5), 1).is_err());
    }
}
