//! Photon-by-photon stochastic simulation of the detector models.
//!
//! Used as an independent oracle for the exact recurrences. A shot with `n`
//! photons is the first `n` photons of a simulated photon stream, so a single
//! stream yields one sample for every photon number `0..dimension`. Cells for
//! different `n` are therefore correlated, but each cell is an unbiased
//! frequency over `samples` independent shots.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::DetectorModel;
use crate::error::{Error, Result};
use crate::povm::PovmSet;

/// Number of independent sample streams; stream `s` is seeded with `seed + s`.
pub const STREAMS: u64 = 8;

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

fn threshold(p: f64) -> u128 {
    (p.clamp(0.0, 1.0) * TWO_POW_64) as u128
}

/// How one photon is routed.
enum Routing {
    /// Detected with probability `eta`, then a uniformly random bin.
    Uniform { detect: u128, bins: u128 },
    /// Cumulative per-bin thresholds; anything above the last one is lost.
    Cumulative(Vec<u128>),
}

impl Routing {
    fn route(&self, rng: &mut ChaCha8Rng) -> Option<usize> {
        let u = rng.next_u64() as u128;
        match self {
            Routing::Uniform { detect, bins } => {
                (u < *detect).then(|| (u * bins / detect) as usize)
            }
            Routing::Cumulative(cum) => cum.iter().position(|&c| u < c),
        }
    }
}

struct Simulator {
    bins: usize,
    routing: Routing,
    dark: u128,
    crosstalk: u128,
}

impl Simulator {
    fn new(model: &DetectorModel) -> Self {
        let routing = match model {
            DetectorModel::EqualSplit(m) => Routing::Uniform {
                detect: threshold(m.efficiency),
                bins: m.bins as u128,
            },
            DetectorModel::LogLoop(m) => {
                let mut acc = 0.0;
                let cum = m
                    .bin_probabilities()
                    .into_iter()
                    .map(|q| {
                        acc += q;
                        threshold(acc)
                    })
                    .collect();
                Routing::Cumulative(cum)
            }
        };
        Self {
            bins: model.bins(),
            routing,
            dark: threshold(model.dark_prob()),
            crosstalk: threshold(model.crosstalk_prob()),
        }
    }

    fn noisy(&self) -> bool {
        self.dark > 0 || self.crosstalk > 0
    }

    fn bernoulli(rng: &mut ChaCha8Rng, thr: u128) -> bool {
        thr > 0 && (rng.next_u64() as u128) < thr
    }

    /// Observed click count for `real` photon-induced clicks.
    fn observe(&self, real: usize, rng: &mut ChaCha8Rng) -> usize {
        let mut clicks = real;
        if real > 0 && real < self.bins {
            let mut induced = false;
            for _ in 0..real {
                induced |= Self::bernoulli(rng, self.crosstalk);
            }
            if induced {
                clicks += 1;
            }
        }
        let idle = self.bins - clicks;
        for _ in 0..idle {
            if Self::bernoulli(rng, self.dark) {
                clicks += 1;
            }
        }
        clicks
    }

    /// Outcome counts, row-major `[outcome][photon_number]`.
    fn run(&self, dimension: usize, samples: u64, seed: u64) -> Vec<u64> {
        let outcomes = self.bins + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0u64; outcomes * dimension];
        // Shots whose photon-induced clicks fill every bin from photon number i on.
        let mut full_from = vec![0u64; dimension];
        let noisy = self.noisy();
        // Net change in true-click counts at photon number i, noiseless path only.
        let mut delta = vec![0i64; if noisy { 0 } else { outcomes * dimension }];

        for _ in 0..samples {
            let mut occupied: u64 = 0;
            let mut real = 0usize;
            if !noisy {
                delta[0] += 1;
            }
            for i in 0..dimension {
                if real == self.bins {
                    full_from[i] += 1;
                    if !noisy {
                        delta[self.bins * dimension + i] -= 1;
                    }
                    break;
                }
                if noisy {
                    let obs = self.observe(real, &mut rng);
                    counts[obs * dimension + i] += 1;
                }
                if i + 1 == dimension {
                    break;
                }
                if let Some(bin) = self.routing.route(&mut rng) {
                    let bit = 1u64 << bin;
                    if occupied & bit == 0 {
                        occupied |= bit;
                        if !noisy {
                            delta[real * dimension + i + 1] -= 1;
                            delta[(real + 1) * dimension + i + 1] += 1;
                        }
                        real += 1;
                    }
                }
            }
        }

        if !noisy {
            for k in 0..outcomes {
                let mut running = 0i64;
                for i in 0..dimension {
                    running += delta[k * dimension + i];
                    counts[k * dimension + i] = running as u64;
                }
            }
        }
        let mut running = 0u64;
        for (i, f) in full_from.iter().enumerate() {
            running += f;
            counts[self.bins * dimension + i] += running;
        }
        counts
    }
}

/// Empirical POVM from `samples` simulated shots per photon number.
///
/// The sample budget is split across [`STREAMS`] independent streams, run in
/// parallel and summed in stream order, so output is bitwise reproducible for
/// a fixed `seed` regardless of thread count.
pub fn monte_carlo_povm(
    model: &DetectorModel,
    dimension: usize,
    samples: u64,
    seed: u64,
) -> Result<PovmSet> {
    model.validate()?;
    if samples == 0 {
        return Err(Error::Parameter("samples must be at least 1".into()));
    }
    if dimension == 0 {
        return Err(Error::Dimension("dimension must be at least 1".into()));
    }
    let sim = Simulator::new(model);
    let outcomes = sim.bins + 1;
    let per_stream: Vec<u64> = (0..STREAMS)
        .map(|s| samples / STREAMS + u64::from(s < samples % STREAMS))
        .collect();
    let partial: Vec<Vec<u64>> = per_stream
        .par_iter()
        .enumerate()
        .map(|(s, &n)| sim.run(dimension, n, seed.wrapping_add(s as u64)))
        .collect();
    let mut total = vec![0u64; outcomes * dimension];
    for p in &partial {
        for (t, c) in total.iter_mut().zip(p) {
            *t += c;
        }
    }
    let rows = total
        .chunks(dimension)
        .map(|row| row.iter().map(|&c| c as f64 / samples as f64).collect())
        .collect();
    PovmSet::from_rows(rows)
}
