use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fit::{figures_of_merit, Estimate, FiguresOfMerit, FitFamily, FitOptions};
use crate::error::{Error, Result};
use crate::probe::{OutcomeStats, ProbeSet};
use crate::tomography::{reconstruct, ReconstructionConfig};

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

/// Error bars from an uncertain probe amplitude calibration.
///
/// The point estimate comes from reconstructing with the nominal probes. Each
/// of `trials` repetitions rescales every probe mean by a common factor
/// `(1 + delta)^2` with `delta` uniform in `[-amp_uncertainty, amp_uncertainty]`,
/// reconstructs, and refits; the error bar is the sample standard deviation of
/// the refitted values. Estimates sitting on a parameter bound get one-sided bars.
#[allow(clippy::too_many_arguments)]
pub fn uncertainty_bars(
    stats: &OutcomeStats,
    probes: &ProbeSet,
    k: usize,
    config: &ReconstructionConfig,
    family: FitFamily,
    amp_uncertainty: f64,
    trials: usize,
    seed: u64,
    options: &FitOptions,
) -> Result<FiguresOfMerit> {
    if !(0.0..0.5).contains(&amp_uncertainty) {
        return Err(Error::Parameter(format!(
            "amplitude uncertainty {amp_uncertainty} outside [0, 0.5)"
        )));
    }
    if trials < 2 {
        return Err(Error::Parameter(format!("need at least 2 trials, got {trials}")));
    }
    let nominal = reconstruct(stats, probes, k, config)?;
    let point = figures_of_merit(&nominal.povm, family, options)?;
    if amp_uncertainty == 0.0 {
        return Ok(point);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales: Vec<f64> = (0..trials)
        .map(|_| {
            let delta: f64 = rng.random_range(-amp_uncertainty..=amp_uncertainty);
            (1.0 + delta).powi(2)
        })
        .collect();
    let fits: Vec<FiguresOfMerit> = scales
        .par_iter()
        .map(|&s| {
            let scaled = probes.scaled(s)?;
            let rec = reconstruct(stats, &scaled, k, config)?;
            figures_of_merit(&rec.povm, family, options)
        })
        .collect::<Result<_>>()?;

    let column = |f: fn(&FiguresOfMerit) -> f64| -> f64 {
        sample_std(&fits.iter().map(f).collect::<Vec<_>>())
    };
    let eta_err = column(|f| f.efficiency.value);
    let dark_err = column(|f| f.dark_prob.value);
    let xtalk_err = column(|f| f.crosstalk_prob.value);
    Ok(FiguresOfMerit {
        efficiency: Estimate::with_error(point.efficiency.value, eta_err, 0.0, 1.0),
        dark_prob: Estimate::with_error(point.dark_prob.value, dark_err, 0.0, 1.0),
        crosstalk_prob: Estimate::with_error(point.crosstalk_prob.value, xtalk_err, 0.0, 1.0),
        ..point
    })
}
