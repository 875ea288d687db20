//! Coherent-state probes, the Poissonian probe matrix and simulated outcome
//! statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_factorials, CompensatedSum};
use crate::povm::PovmSet;

/// Default number of probe states per reconstruction.
pub const DEFAULT_PROBE_COUNT: usize = 30;
/// Default number of shots per probe.
pub const DEFAULT_SHOTS: u64 = 1_000_000;
/// Largest tolerated Poisson tail mass lost to truncation.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// Smallest Fock truncation `M >= mu + 10 sqrt(mu) + 20` that captures a
/// coherent state of mean photon number `mu`.
pub fn adequate_dimension(mu: f64) -> usize {
    (mu + 10.0 * mu.sqrt() + 20.0).ceil() as usize
}

/// Largest mean photon number whose adequate dimension fits in `dimension`.
pub fn max_adequate_mean(dimension: usize) -> f64 {
    let room = dimension as f64 - 20.0;
    if room <= 0.0 {
        return 0.0;
    }
    let root = (-10.0 + (100.0 + 4.0 * room).sqrt()) / 2.0;
    let mut mu = root * root;
    while mu > 0.0 && adequate_dimension(mu) > dimension {
        mu = (mu - 1e-9 * mu.max(1.0)).max(0.0);
    }
    mu
}

/// Mean photon numbers `|alpha|^2` of the coherent probe states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    means: Vec<f64>,
}

impl ProbeSet {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::Parameter("probe set is empty".into()));
        }
        if means.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Parameter(
                "probe means must be finite and nonnegative".into(),
            ));
        }
        if means.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter(
                "probe means must be strictly increasing".into(),
            ));
        }
        Ok(Self { means })
    }

    /// `mu_m = mu_max (m / (count - 1))^2`, starting with the vacuum.
    pub fn quadratic(mu_max: f64, count: usize) -> Result<Self> {
        if !(mu_max > 0.0 && mu_max.is_finite()) {
            return Err(Error::Parameter(format!("mu_max = {mu_max} must be positive")));
        }
        if count < 3 {
            return Err(Error::Parameter(format!("probe count {count} must be at least 3")));
        }
        let last = (count - 1) as f64;
        Self::new(
            (0..count)
                .map(|m| {
                    let x = m as f64 / last;
                    mu_max * x * x
                })
                .collect(),
        )
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn max_mean(&self) -> f64 {
        *self.means.last().expect("non-empty")
    }

    /// Every mean multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.means.iter().map(|m| m * factor).collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            means: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        Self::new(raw.means)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("probe set serializes")
    }
}

/// Poisson photon-number distributions of the probes, `F[m][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeMatrix {
    rows: Vec<Vec<f64>>,
    dimension: usize,
}

impl ProbeMatrix {
    /// Evaluates `e^-mu mu^i / i!` in log space for `i < dimension`.
    ///
    /// Rows whose mass inside the truncation falls short of `1 - 1e-6` are
    /// logged as warnings; see [`truncated_rows`](Self::truncated_rows).
    pub fn new(probes: &ProbeSet, dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::Dimension(format!(
                "probe matrix dimension {dimension} must be at least 2"
            )));
        }
        let ln_fact = ln_factorials(dimension);
        let rows: Vec<Vec<f64>> = probes
            .means()
            .iter()
            .map(|&mu| {
                if mu == 0.0 {
                    let mut row = vec![0.0; dimension];
                    row[0] = 1.0;
                    return row;
                }
                let ln_mu = mu.ln();
                (0..dimension)
                    .map(|i| (-mu + i as f64 * ln_mu - ln_fact[i]).exp())
                    .collect()
            })
            .collect();
        let matrix = Self { rows, dimension };
        for m in matrix.truncated_rows() {
            log::warn!(
                "probe {m} (mu = {}) loses more than {TRUNCATION_TOLERANCE} of its mass beyond dimension {dimension}",
                probes.means()[m]
            );
        }
        Ok(matrix)
    }

    /// Arbitrary probe photon-number distributions, one row per probe.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dimension = rows.first().map_or(0, Vec::len);
        if dimension < 2 {
            return Err(Error::Dimension(format!(
                "probe matrix dimension {dimension} must be at least 2"
            )));
        }
        if rows.iter().any(|r| r.len() != dimension) {
            return Err(Error::Shape("probe matrix rows differ in length".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Parameter(
                "probe matrix entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { rows, dimension })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_probes(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.rows[m]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row_sum(&self, m: usize) -> f64 {
        crate::numeric::sum(self.rows[m].iter().copied())
    }

    /// Indices of probes whose truncated row sum is below `1 - 1e-6`.
    pub fn truncated_rows(&self) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&m| self.row_sum(m) < 1.0 - TRUNCATION_TOLERANCE)
            .collect()
    }

    /// Exact outcome probabilities `p(n | mu_m) = sum_i F[m][i] theta_n(i)`.
    pub fn outcome_probabilities(&self, povm: &PovmSet) -> Result<Vec<Vec<f64>>> {
        if povm.dimension() != self.dimension {
            return Err(Error::Shape(format!(
                "POVM dimension {} differs from probe matrix dimension {}",
                povm.dimension(),
                self.dimension
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|f| {
                povm.outcomes()
                    .iter()
                    .map(|o| {
                        f.iter()
                            .zip(&o.weights)
                            .map(|(a, b)| a * b)
                            .collect::<CompensatedSum>()
                            .value()
                    })
                    .collect()
            })
            .collect())
    }
}

/// Probe-by-outcome frequency table `P[m][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeStats {
    means: Vec<f64>,
    shots: Vec<u64>,
    frequencies: Vec<Vec<f64>>,
}

impl OutcomeStats {
    /// `frequencies[m]` is the outcome distribution for probe `means[m]`.
    pub fn new(means: Vec<f64>, shots: Vec<u64>, frequencies: Vec<Vec<f64>>) -> Result<Self> {
        if means.len() != shots.len() || means.len() != frequencies.len() {
            return Err(Error::Shape(format!(
                "{} means, {} shot counts and {} frequency rows",
                means.len(),
                shots.len(),
                frequencies.len()
            )));
        }
        let k = frequencies.first().map_or(0, Vec::len);
        if k < 2 {
            return Err(Error::Shape("outcome statistics need at least 2 outcomes".into()));
        }
        for (m, row) in frequencies.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Shape(format!("probe row {m} has {} outcomes, expected {k}", row.len())));
            }
            if row.iter().any(|f| !f.is_finite() || *f < 0.0 || *f > 1.0) {
                return Err(Error::Format(format!("probe row {m} has a frequency outside [0, 1]")));
            }
        }
        Ok(Self {
            means,
            shots,
            frequencies,
        })
    }

    /// Noise-free statistics `P = F Pi^T` for the given probes.
    pub fn exact(povm: &PovmSet, probes: &ProbeSet) -> Result<Self> {
        let f = ProbeMatrix::new(probes, povm.dimension())?;
        let p = f.outcome_probabilities(povm)?;
        Self::new(probes.means().to_vec(), vec![0; probes.len()], p)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn shots(&self) -> &[u64] {
        &self.shots
    }

    pub fn frequencies(&self) -> &[Vec<f64>] {
        &self.frequencies
    }

    pub fn num_probes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.frequencies[0].len()
    }

    /// Probe set recorded alongside the statistics.
    pub fn probe_set(&self) -> Result<ProbeSet> {
        ProbeSet::new(self.means.clone())
    }

    /// Squared Frobenius norm of the frequency matrix.
    pub fn frobenius_sq(&self) -> f64 {
        crate::numeric::sum(self.frequencies.iter().flatten().map(|f| f * f))
    }
}

/// Samples `shots` detections per probe from `p(n | mu_m)`.
///
/// Each probe draws a multinomial count vector through sequential binomials
/// using its own stream seeded with `seed + m`.
pub fn simulate_outcomes(
    povm: &PovmSet,
    probes: &ProbeSet,
    shots: u64,
    seed: u64,
) -> Result<OutcomeStats> {
    if shots == 0 {
        return Err(Error::Parameter("shots must be at least 1".into()));
    }
    let dimension = povm.dimension();
    for &mu in probes.means() {
        let required = adequate_dimension(mu);
        if required > dimension {
            return Err(Error::Truncation {
                mean: mu,
                dimension,
                required,
            });
        }
    }
    let f = ProbeMatrix::new(probes, dimension)?;
    let exact = f.outcome_probabilities(povm)?;
    let frequencies: Vec<Vec<f64>> = exact
        .par_iter()
        .enumerate()
        .map(|(m, p)| sample_multinomial(p, shots, seed.wrapping_add(m as u64)))
        .collect::<Result<_>>()?;
    OutcomeStats::new(probes.means().to_vec(), vec![shots; probes.len()], frequencies)
}

fn sample_multinomial(p: &[f64], shots: u64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clipped: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = crate::numeric::sum(clipped.iter().copied());
    let mut remaining_shots = shots;
    let mut remaining_mass = 1.0;
    let mut counts = vec![0u64; p.len()];
    for (n, &pn) in clipped.iter().enumerate() {
        if remaining_shots == 0 {
            break;
        }
        let q = pn / total;
        if n + 1 == p.len() {
            counts[n] = remaining_shots;
            break;
        }
        let cond = if remaining_mass > 0.0 {
            (q / remaining_mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining_shots, cond)
            .map_err(|e| Error::Parameter(format!("binomial sampling failed: {e}")))?
            .sample(&mut rng);
        counts[n] = draw;
        remaining_shots -= draw;
        remaining_mass -= q;
    }
    Ok(counts.iter().map(|&c| c as f64 / shots as f64).collect())
}
