//! Reference computations that share no code with the library paths they
//! check.

#![allow(dead_code)]

/// `p(clicks | photons)` for an equal-split detector by enumerating every
/// assignment of each photon to "lost" or one of the bins.
pub fn enumerate_equal_split(bins: usize, efficiency: f64, photons: u32) -> Vec<f64> {
    let choices = bins + 1;
    let mut out = vec![0.0; bins + 1];
    let total = (choices as u64).pow(photons);
    for code in 0..total {
        let mut c = code;
        let mut weight = 1.0;
        let mut occupied = 0u64;
        for _ in 0..photons {
            let slot = (c % choices as u64) as usize;
            c /= choices as u64;
            if slot == bins {
                weight *= 1.0 - efficiency;
            } else {
                weight *= efficiency / bins as f64;
                occupied |= 1 << slot;
            }
        }
        out[occupied.count_ones() as usize] += weight;
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Click-count distribution of a loop detector whose photons land in bin `b`
/// with probability `q[b]` (and are lost otherwise), by inclusion-exclusion
/// over subsets `T` of bins:
/// `P(c) = sum_{|T| <= c} (-1)^(c-|T|) C(K-|T|, c-|T|) (q_lost + q_T)^n`.
pub fn loop_inclusion_exclusion(q: &[f64], photons: i32) -> Vec<f64> {
    let k = q.len();
    let lost = 1.0 - q.iter().sum::<f64>();
    let mut out = vec![0.0; k + 1];
    for subset in 0u32..(1 << k) {
        let size = subset.count_ones() as usize;
        let q_t: f64 = (0..k).filter(|b| subset >> b & 1 == 1).map(|b| q[b]).sum();
        let power = (lost + q_t).powi(photons);
        for (c, slot) in out.iter_mut().enumerate().skip(size) {
            let sign = if (c - size) % 2 == 0 { 1.0 } else { -1.0 };
            *slot += sign * binomial(k - size, c - size) * power;
        }
    }
    out
}

/// Per-bin landing probabilities of a loop detector.
pub fn loop_bin_probabilities(bins: usize, out_coupling: f64, loop_eff: f64, det_eff: f64) -> Vec<f64> {
    (0..bins)
        .map(|b| det_eff * out_coupling * ((1.0 - out_coupling) * loop_eff).powi(b as i32))
        .collect()
}

/// Applies at most one cross-talk click and then independent dark counts to
/// a click-count distribution, by walking every dark-count pattern of the
/// idle bins.
pub fn noisy_clicks(clean: &[f64], bins: usize, dark: f64, xtalk: f64) -> Vec<f64> {
    let mut after_xtalk = vec![0.0; bins + 1];
    for (k, &p) in clean.iter().enumerate() {
        let fire = if k >= 1 && k < bins {
            1.0 - (1.0 - xtalk).powi(k as i32)
        } else {
            0.0
        };
        after_xtalk[k] += p * (1.0 - fire);
        if fire > 0.0 {
            after_xtalk[k + 1] += p * fire;
        }
    }
    let mut out = vec![0.0; bins + 1];
    for (k, &p) in after_xtalk.iter().enumerate() {
        let idle = bins - k;
        for pattern in 0u32..(1 << idle) {
            let extra = pattern.count_ones() as i32;
            let w = dark.powi(extra) * (1.0 - dark).powi(idle as i32 - extra);
            out[k + extra as usize] += p * w;
        }
    }
    out
}

/// Poisson pmf by the multiplicative recursion `p(i+1) = p(i) mu / (i+1)`.
pub fn poisson_by_recursion(mu: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut p = (-mu).exp();
    for i in 0..len {
        out.push(p);
        p *= mu / (i + 1) as f64;
    }
    out
}

/// `p(n | mu) = sum_i Poisson(i; mu) theta_n(i)` from plain nested loops.
pub fn exact_outcome_probabilities(rows: &[Vec<f64>], mu: f64) -> Vec<f64> {
    let len = rows[0].len();
    let poisson = poisson_by_recursion(mu, len);
    rows.iter()
        .map(|row| row.iter().zip(&poisson).map(|(t, p)| t * p).sum())
        .collect()
}

/// Error-free double-double accumulator.
#[derive(Clone, Copy, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    pub fn add(&mut self, x: f64) {
        let (s, e) = Self::two_sum(self.hi, x);
        let (hi, lo) = Self::two_sum(s, e + self.lo);
        self.hi = hi;
        self.lo = lo;
    }

    /// Adds `x * x` including the rounding error of the product.
    pub fn add_square(&mut self, x: f64) {
        let p = x * x;
        let err = x.mul_add(x, -p);
        self.add(p);
        self.add(err);
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Purity `sum theta^2 / (sum theta)^2` with double-double accumulation.
pub fn purity_oracle(weights: &[f64]) -> f64 {
    let mut sq = DoubleDouble::default();
    let mut lin = DoubleDouble::default();
    for &w in weights {
        sq.add_square(w);
        lin.add(w);
    }
    let s = lin.value();
    sq.value() / (s * s)
}

/// Shannon entropy in bits of `theta / sum(theta)`, straight from the
/// definition with explicit flat prior `1/M` and evidence `p(n)`.
pub fn bayes_entropy_bits(weights: &[f64]) -> f64 {
    let m = weights.len() as f64;
    let evidence: f64 = weights.iter().map(|w| w / m).sum();
    weights
        .iter()
        .map(|w| w / m / evidence)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// Largest absolute elementwise difference between two row sets.
pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Whether `count` hits out of `shots` is within four standard deviations of
/// a cell with probability `p`. Sparse cells (expected count below 25) use
/// the exact Poisson tail at the two-sided 4-sigma level instead of the
/// normal bound.
pub fn count_plausible(count: u64, shots: u64, p: f64) -> bool {
    let lambda = shots as f64 * p;
    let c = count as f64;
    if lambda >= 25.0 {
        return (c - lambda).abs() <= 4.0 * (lambda * (1.0 - p)).sqrt() + 1e-6;
    }
    const LEVEL: f64 = 6.3e-5;
    let mut term = (-lambda).exp();
    let mut below = 0.0;
    for j in 0..count {
        below += term;
        term *= lambda / (j + 1) as f64;
    }
    let upper_tail = 1.0 - below;
    let lower_tail = below + term;
    upper_tail >= LEVEL && lower_tail >= LEVEL
}
