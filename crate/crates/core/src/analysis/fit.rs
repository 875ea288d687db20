//! Figures of merit (efficiency, dark-count and cross-talk probability) by
//! least-squares fit of a forward model to a POVM.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::noise::{crosstalk_transition, dark_count_transition};
use crate::models::{equal_split_povm, loop_povm, EqualSplitModel, LogLoopModel};
use crate::numeric::CompensatedSum;
use crate::povm::{PovmSet, DEFAULT_SATURATION_EPSILON};

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Model family used as the fit template.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FitFamily {
    EqualSplit {
        bins: usize,
    },
    /// Loop geometry is held fixed; the fitted efficiency is the detector
    /// efficiency.
    LogLoop {
        bins: usize,
        out_coupling: f64,
        loop_efficiency: f64,
    },
}

impl FitFamily {
    pub fn bins(&self) -> usize {
        match *self {
            FitFamily::EqualSplit { bins } | FitFamily::LogLoop { bins, .. } => bins,
        }
    }
}

impl From<&crate::models::DetectorModel> for FitFamily {
    fn from(model: &crate::models::DetectorModel) -> Self {
        match model {
            crate::models::DetectorModel::EqualSplit(m) => FitFamily::EqualSplit { bins: m.bins },
            crate::models::DetectorModel::LogLoop(m) => FitFamily::LogLoop {
                bins: m.bins,
                out_coupling: m.out_coupling,
                loop_efficiency: m.loop_efficiency,
            },
        }
    }
}

/// Fit settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// The fit window ends where the largest outcome reaches `1 - epsilon`.
    pub saturation_epsilon: f64,
    /// Upper limit on the number of photon numbers in the fit window.
    pub max_window: usize,
    /// Largest accepted root-mean-square cell residual.
    pub divergence_threshold: f64,
    pub max_cycles: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            saturation_epsilon: DEFAULT_SATURATION_EPSILON,
            max_window: 400,
            divergence_threshold: 0.05,
            max_cycles: 200,
        }
    }
}

/// A point estimate with lower and upper error bars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub minus: f64,
    pub plus: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            minus: 0.0,
            plus: 0.0,
        }
    }

    /// Symmetric bar, collapsed to one side when `value` sits on a bound of
    /// `[lower, upper]`.
    pub fn with_error(value: f64, error: f64, lower: f64, upper: f64) -> Self {
        let at_lower = value <= lower + 1e-12;
        let at_upper = value >= upper - 1e-12;
        Self {
            value,
            minus: if at_lower { 0.0 } else { error },
            plus: if at_upper { 0.0 } else { error },
        }
    }

    pub fn is_one_sided(&self) -> bool {
        (self.minus == 0.0) != (self.plus == 0.0)
    }
}

/// Fitted figures of merit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiguresOfMerit {
    /// Single-photon efficiency for equal-split devices, detector efficiency
    /// for loop devices.
    pub efficiency: Estimate,
    /// Probability of at least one click on vacuum, for the whole device.
    pub dark_prob: Estimate,
    pub crosstalk_prob: Estimate,
    /// Fitted per-bin dark-click probability.
    pub per_bin_dark_prob: f64,
    pub rms_residual: f64,
    /// Number of photon numbers used by the fit.
    pub window: usize,
}

/// Device-level dark probability for `bins` independent bins.
pub fn device_dark_prob(per_bin: f64, bins: usize) -> f64 {
    -((bins as f64) * (-per_bin).ln_1p()).exp_m1()
}

/// Per-bin dark probability that gives device-level `device` over `bins` bins.
pub fn per_bin_dark_prob(device: f64, bins: usize) -> f64 {
    -((-device).ln_1p() / bins as f64).exp_m1()
}

/// Forward model with the noiseless part cached per efficiency.
struct Forward<'a> {
    family: FitFamily,
    target: &'a PovmSet,
    window: usize,
    outcomes: usize,
    /// Loop POVM at unit detector efficiency, thinned for other values.
    loop_unit: Option<PovmSet>,
    cached_eta: f64,
    cached_base: Vec<Vec<f64>>,
}

impl<'a> Forward<'a> {
    fn new(family: FitFamily, target: &'a PovmSet, window: usize) -> Result<Self> {
        let loop_unit = match family {
            FitFamily::LogLoop {
                bins,
                out_coupling,
                loop_efficiency,
            } => Some(loop_povm(
                &LogLoopModel::new(bins, 1.0).with_loop(out_coupling, loop_efficiency),
                window.max(2),
            )?),
            FitFamily::EqualSplit { .. } => None,
        };
        Ok(Self {
            family,
            target,
            window,
            outcomes: target.num_outcomes(),
            loop_unit,
            cached_eta: f64::NAN,
            cached_base: Vec::new(),
        })
    }

    fn base(&mut self, eta: f64) -> Result<&[Vec<f64>]> {
        if eta != self.cached_eta {
            self.cached_base = match self.family {
                FitFamily::EqualSplit { bins } => {
                    let set = equal_split_povm(&EqualSplitModel::new(bins, eta), self.window.max(2))?;
                    set.into_rows()
                }
                FitFamily::LogLoop { .. } => {
                    let unit = self.loop_unit.as_ref().expect("loop template");
                    thin(unit, eta, self.window)
                }
            };
            self.cached_eta = eta;
        }
        Ok(&self.cached_base)
    }

    /// Sum of squared differences over the window for `(eta, p_dark per bin, p_xtalk)`.
    fn sse(&mut self, params: [f64; 3]) -> Result<f64> {
        let [eta, dark, xtalk] = params;
        let bins = self.family.bins();
        let k = self.outcomes;
        let xt = crosstalk_transition(k, xtalk, bins);
        let dk = dark_count_transition(k, dark, bins);
        let window = self.window;
        let target = self.target;
        let base = self.base(eta)?;
        let mut acc = CompensatedSum::new();
        let mut mid = vec![0.0; k];
        let mut out = vec![0.0; k];
        for i in 0..window {
            mid.iter_mut().for_each(|v| *v = 0.0);
            for from in 0..k {
                let w = base[from][i];
                if w != 0.0 {
                    for (to, t) in xt[from].iter().enumerate() {
                        mid[to] += w * t;
                    }
                }
            }
            out.iter_mut().for_each(|v| *v = 0.0);
            for from in 0..k {
                let w = mid[from];
                if w != 0.0 {
                    for (to, t) in dk[from].iter().enumerate() {
                        out[to] += w * t;
                    }
                }
            }
            for n in 0..k {
                let d = out[n] - target.weight(n, i);
                acc.add(d * d);
            }
        }
        Ok(acc.value())
    }
}

/// Binomial thinning: POVM rows for detector efficiency `eta` from the
/// unit-efficiency POVM, `theta_eta(i) = sum_j Bin(j; i, eta) theta_1(j)`.
/// The binomial rows follow Pascal's rule, all terms nonnegative.
fn thin(unit: &PovmSet, eta: f64, window: usize) -> Vec<Vec<f64>> {
    let k = unit.num_outcomes();
    let mut rows = vec![vec![0.0; window]; k];
    let mut pmf = vec![0.0; window];
    pmf[0] = 1.0;
    for i in 0..window {
        if i > 0 {
            for j in (1..=i).rev() {
                pmf[j] = eta * pmf[j - 1] + (1.0 - eta) * pmf[j];
            }
            pmf[0] *= 1.0 - eta;
        }
        for (n, row) in rows.iter_mut().enumerate() {
            let theta = &unit.outcomes()[n].weights;
            row[i] = pmf[..=i].iter().zip(theta).map(|(b, t)| b * t).sum();
        }
    }
    rows
}

fn golden_section(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Index one past the photon number at which the largest outcome saturates.
fn fit_window(set: &PovmSet, options: &FitOptions) -> usize {
    let top = &set.outcome(set.num_outcomes() - 1).expect("outcomes").weights;
    let saturated = top
        .iter()
        .position(|&w| w >= 1.0 - options.saturation_epsilon)
        .map_or(set.dimension(), |i| i + 1);
    saturated.min(options.max_window).min(set.dimension()).max(2)
}

/// Fits efficiency, dark-count and cross-talk probabilities of `family` to
/// `set` by coordinate search with golden-section line minimization.
///
/// Starting values come from the vacuum and single-photon columns. Each
/// cycle minimizes along every coordinate inside a window that shrinks once
/// the estimate stops moving.
pub fn figures_of_merit(set: &PovmSet, family: FitFamily, options: &FitOptions) -> Result<FiguresOfMerit> {
    let bins = family.bins();
    if bins == 0 {
        return Err(Error::Parameter("bins must be at least 1".into()));
    }
    if set.num_outcomes() != bins + 1 {
        return Err(Error::Shape(format!(
            "POVM has {} outcomes, family expects {}",
            set.num_outcomes(),
            bins + 1
        )));
    }
    if set.dimension() < 2 {
        return Err(Error::Dimension("need at least photon numbers 0 and 1".into()));
    }
    let window = fit_window(set, options);
    let mut forward = Forward::new(family, set, window)?;

    // Starting point.
    let vac_none = set.weight(0, 0).clamp(1e-12, 1.0);
    let dark_device0 = (1.0 - vac_none).clamp(0.0, 0.5);
    let dark0 = per_bin_dark_prob(dark_device0, bins);
    let single_none = set.weight(0, 1).clamp(0.0, 1.0);
    let click0 = (1.0 - single_none / vac_none).clamp(1e-3, 1.0);
    let (eta0, eta_hi) = match family {
        FitFamily::EqualSplit { .. } => (click0, 1.0),
        FitFamily::LogLoop {
            bins,
            out_coupling,
            loop_efficiency,
        } => {
            let reach = LogLoopModel::new(bins, 1.0)
                .with_loop(out_coupling, loop_efficiency)
                .single_photon_efficiency();
            ((click0 / reach).clamp(1e-3, 1.0), 1.0)
        }
    };
    let multi1: f64 = (2..set.num_outcomes()).map(|n| set.weight(n, 1)).sum();
    let dark_rest = device_dark_prob(dark0, bins.saturating_sub(1));
    let xtalk0 = ((multi1 - click0 * dark_rest) / click0).clamp(0.0, 0.5);

    let lower = [1e-6, 0.0, 0.0];
    let upper = [eta_hi, 0.5, 0.5];
    let tol = [1e-10, 1e-13, 1e-11];
    let mut x = [eta0, dark0, xtalk0];
    let mut width = [0.1, (4.0 * dark0).max(1e-4), (2.0 * xtalk0).max(0.02)];
    let mut best = forward.sse(x)?;

    for _ in 0..options.max_cycles {
        if (0..3).all(|j| width[j] <= tol[j]) {
            break;
        }
        for j in 0..3 {
            if width[j] <= tol[j] {
                continue;
            }
            let lo = (x[j] - width[j]).max(lower[j]);
            let hi = (x[j] + width[j]).min(upper[j]);
            let (t, val) = golden_section(lo, hi, tol[j].max(1e-4 * width[j]), |t| {
                let mut p = x;
                p[j] = t;
                forward.sse(p)
            })?;
            let moved = (t - x[j]).abs();
            if val < best {
                x[j] = t;
                best = val;
            }
            let at_edge = (t - lo).abs() < 0.02 * (hi - lo) && lo > lower[j]
                || (hi - t).abs() < 0.02 * (hi - lo) && hi < upper[j];
            if at_edge {
                width[j] *= 2.0;
            } else if moved < 0.25 * width[j] {
                width[j] *= 0.25;
            }
        }
    }

    let cells = (window * set.num_outcomes()) as f64;
    let rms = (best / cells).sqrt();
    if rms > options.divergence_threshold {
        return Err(Error::FitDivergence {
            rms,
            threshold: options.divergence_threshold,
        });
    }
    Ok(FiguresOfMerit {
        efficiency: Estimate::exact(x[0]),
        dark_prob: Estimate::exact(device_dark_prob(x[1], bins)),
        crosstalk_prob: Estimate::exact(x[2]),
        per_bin_dark_prob: x[1],
        rms_residual: rms,
        window,
    })
}
