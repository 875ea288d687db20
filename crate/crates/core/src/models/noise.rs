//! Detector-electronics noise as exact Markov maps on outcome space.
//!
//! Each map is a `K x K` transition matrix `T[from][to]` and the new POVM is
//! `theta'_to(i) = sum_from T[from][to] theta_from(i)`. Column sums are
//! preserved because every row of `T` is a probability vector.

use super::check_probability;
use crate::error::{Error, Result};
use crate::numeric::{binomial_pmf, CompensatedSum};
use crate::povm::PovmSet;

fn check_bins(set: &PovmSet, bins: usize) -> Result<()> {
    if bins + 1 < set.num_outcomes() {
        return Err(Error::Parameter(format!(
            "{bins} bins cannot produce {} outcomes",
            set.num_outcomes()
        )));
    }
    Ok(())
}

fn apply_transition(set: &PovmSet, transition: &[Vec<f64>]) -> Result<PovmSet> {
    let k = set.num_outcomes();
    let m = set.dimension();
    let mut rows = vec![vec![0.0; m]; k];
    let mut acc = vec![CompensatedSum::new(); k];
    for i in 0..m {
        acc.iter_mut().for_each(|a| *a = CompensatedSum::new());
        for (from, t_row) in transition.iter().enumerate() {
            let w = set.weight(from, i);
            if w == 0.0 {
                continue;
            }
            for (to, &t) in t_row.iter().enumerate() {
                if t != 0.0 {
                    acc[to].add(w * t);
                }
            }
        }
        for (row, a) in rows.iter_mut().zip(&acc) {
            row[i] = a.value();
        }
    }
    PovmSet::from_rows(rows)
}

/// Dark-count transition matrix: from `k` true clicks, each of the
/// `bins - k` idle bins fires independently with probability `dark_prob`.
pub fn dark_count_transition(outcomes: usize, dark_prob: f64, bins: usize) -> Vec<Vec<f64>> {
    let top = outcomes - 1;
    (0..outcomes)
        .map(|from| {
            let mut row = vec![0.0; outcomes];
            let idle = bins.saturating_sub(from) as u64;
            for extra in 0..=idle {
                let to = (from + extra as usize).min(top);
                row[to] += binomial_pmf(idle, extra, dark_prob);
            }
            row
        })
        .collect()
}

/// Cross-talk transition matrix: a shot with `k` real clicks gains one extra
/// click with probability `1 - (1 - crosstalk_prob)^k`, unless every bin
/// already fired.
pub fn crosstalk_transition(outcomes: usize, crosstalk_prob: f64, bins: usize) -> Vec<Vec<f64>> {
    let top = outcomes - 1;
    (0..outcomes)
        .map(|from| {
            let mut row = vec![0.0; outcomes];
            if from == 0 || from >= bins.min(top) {
                row[from] = 1.0;
            } else {
                let p = -(from as f64 * (-crosstalk_prob).ln_1p()).exp_m1();
                row[from] = 1.0 - p;
                row[from + 1] = p;
            }
            row
        })
        .collect()
}

/// Adds independent per-bin dark clicks to every shot.
pub fn apply_dark_counts(set: &PovmSet, dark_prob: f64, bins: usize) -> Result<PovmSet> {
    check_probability("dark_prob", dark_prob, false)?;
    check_bins(set, bins)?;
    if dark_prob == 0.0 {
        return Ok(set.clone());
    }
    apply_transition(set, &dark_count_transition(set.num_outcomes(), dark_prob, bins))
}

/// Adds at most one cross-talk click per shot.
pub fn apply_crosstalk(set: &PovmSet, crosstalk_prob: f64, bins: usize) -> Result<PovmSet> {
    check_probability("crosstalk_prob", crosstalk_prob, false)?;
    check_bins(set, bins)?;
    if crosstalk_prob == 0.0 {
        return Ok(set.clone());
    }
    apply_transition(
        set,
        &crosstalk_transition(set.num_outcomes(), crosstalk_prob, bins),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{equal_split_povm, EqualSplitModel};

    #[test]
    fn zero_noise_is_identity() {
        let set = equal_split_povm(&EqualSplitModel::new(4, 0.6), 30).unwrap();
        assert_eq!(apply_dark_counts(&set, 0.0, 4).unwrap(), set);
        assert_eq!(apply_crosstalk(&set, 0.0, 4).unwrap(), set);
    }

    #[test]
    fn single_bin_vacuum_dark_click() {
        let set = PovmSet::from_rows(vec![vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap();
        let noisy = apply_dark_counts(&set, 0.01, 1).unwrap();
        assert!((noisy.weight(1, 0) - 0.01).abs() < 1e-15);
        assert!((noisy.weight(1, 1) - (0.5 + 0.5 * 0.01)).abs() < 1e-15);
    }

    #[test]
    fn vacuum_row_is_binomial() {
        let set = equal_split_povm(&EqualSplitModel::new(4, 0.7), 5).unwrap();
        let noisy = apply_dark_counts(&set, 1e-3, 4).unwrap();
        for k in 0..=4u64 {
            let expect = binomial_pmf(4, k, 1e-3);
            assert!((noisy.weight(k as usize, 0) - expect).abs() < 1e-16);
        }
    }

    #[test]
    fn crosstalk_moves_one_click_to_two() {
        let set = equal_split_povm(&EqualSplitModel::new(4, 0.7), 12).unwrap();
        let px = 0.14;
        let noisy = apply_crosstalk(&set, px, 4).unwrap();
        for i in 0..12 {
            let gain_from_one = px * set.weight(1, i);
            let loss_from_two = (1.0 - (1.0 - px) * (1.0 - px)) * set.weight(2, i);
            let expect = set.weight(2, i) + gain_from_one - loss_from_two;
            assert!((noisy.weight(2, i) - expect).abs() < 1e-15);
        }
        assert!(noisy.validate(1e-12).is_empty());
    }

    #[test]
    fn rejects_bad_inputs() {
        let set = equal_split_povm(&EqualSplitModel::new(4, 0.7), 5).unwrap();
        assert!(apply_dark_counts(&set, 1.0, 4).is_err());
        assert!(apply_crosstalk(&set, -0.1, 4).is_err());
        assert!(apply_dark_counts(&set, 0.1, 3).is_err());
    }
}
