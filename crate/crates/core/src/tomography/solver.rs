use serde::{Deserialize, Serialize};

use super::simplex::simplex_project_in_place;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::povm::PovmSet;
use crate::probe::{adequate_dimension, OutcomeStats, ProbeMatrix, ProbeSet};

pub const DEFAULT_MAX_ITER: usize = 20_000;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default smoothing weight is this fraction of `||P||_F^2 / M`.
pub const DEFAULT_GAMMA_SCALE: f64 = 1e-3;

/// Probe-matrix entries below this are skipped in the products.
const SUPPORT_FLOOR: f64 = 1e-300;

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    /// Smoothing weight; `None` selects `1e-3 ||P||_F^2 / M`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Stop once an accepted step lowers the objective by less than this
    /// relative amount.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Reconstruction dimension `M`.
    pub dimension: usize,
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl ReconstructionConfig {
    pub fn new(dimension: usize) -> Self {
        Self {
            gamma: None,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            dimension,
        }
    }

    /// Dimension set to the truncation-adequacy bound of the largest probe.
    pub fn for_probes(probes: &ProbeSet) -> Self {
        Self::new(adequate_dimension(probes.max_mean()))
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::Parameter("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Parameter(format!("tol = {} must be positive", self.tol)));
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Parameter(format!("gamma = {g} must be nonnegative")));
            }
        }
        if self.dimension < 2 {
            return Err(Error::Dimension(format!(
                "reconstruction dimension {} must be at least 2",
                self.dimension
            )));
        }
        Ok(())
    }

    /// Smoothing weight actually used for `stats`.
    pub fn resolved_gamma(&self, stats: &OutcomeStats) -> f64 {
        self.gamma
            .unwrap_or_else(|| DEFAULT_GAMMA_SCALE * stats.frobenius_sq() / self.dimension as f64)
    }
}

/// Output of [`reconstruct`].
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub povm: PovmSet,
    /// `||P - F Pi^T||_F` of the returned POVM, without the smoothing term.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gamma: f64,
    /// Objective value of the current iterate after each iteration, starting
    /// with the uniform initializer.
    pub objective_history: Vec<f64>,
}

/// Dense least-squares problem in column-major POVM layout: `x[i * K + n]`
/// holds `theta_n(i)`.
struct Problem<'a> {
    f: &'a ProbeMatrix,
    /// Non-negligible column range of each probe row.
    support: Vec<(usize, usize)>,
    p: &'a [Vec<f64>],
    k: usize,
    m: usize,
    gamma: f64,
    /// Per-photon-number metric weights, the absolute row sums of the Hessian
    /// `2 F^T F + 2 gamma D^T D`. Shared by all outcomes of a column, so the
    /// scaled proximal step is still a Euclidean simplex projection.
    metric: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(f: &'a ProbeMatrix, p: &'a [Vec<f64>], k: usize, gamma: f64) -> Self {
        let support = f
            .rows()
            .iter()
            .map(|row| {
                let lo = row.iter().position(|&v| v > SUPPORT_FLOOR).unwrap_or(0);
                let hi = row
                    .iter()
                    .rposition(|&v| v > SUPPORT_FLOOR)
                    .map_or(0, |h| h + 1);
                (lo, hi.max(lo))
            })
            .collect();
        let m = f.dimension();
        let mut metric = vec![0.0; m];
        for (row, &(lo, hi)) in f.rows().iter().zip(&support) {
            let row_sum: f64 = row[lo..hi].iter().sum();
            for i in lo..hi {
                metric[i] += 2.0 * row[i] * row_sum;
            }
        }
        if m > 1 {
            for (i, w) in metric.iter_mut().enumerate() {
                let neighbours = if i == 0 || i == m - 1 { 1.0 } else { 2.0 };
                *w += 4.0 * gamma * neighbours;
            }
        }
        let largest = metric.iter().copied().fold(0.0, f64::max);
        let floor = (largest * 1e-12).max(f64::MIN_POSITIVE);
        metric.iter_mut().for_each(|w| *w = w.max(floor));
        Self {
            f,
            support,
            p,
            k,
            m,
            gamma,
            metric,
        }
    }

    /// `P - F X` as a probes-by-K matrix.
    fn residual_matrix(&self, x: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut r = vec![0.0; self.p.len() * k];
        for (mi, (row, &(lo, hi))) in self.f.rows().iter().zip(&self.support).enumerate() {
            let out = &mut r[mi * k..(mi + 1) * k];
            for i in lo..hi {
                let fi = row[i];
                let col = &x[i * k..(i + 1) * k];
                for n in 0..k {
                    out[n] += fi * col[n];
                }
            }
            for n in 0..k {
                out[n] = self.p[mi][n] - out[n];
            }
        }
        r
    }

    fn smoothing(&self, x: &[f64]) -> f64 {
        if self.gamma == 0.0 {
            return 0.0;
        }
        let k = self.k;
        let mut acc = CompensatedSum::new();
        for i in 0..self.m - 1 {
            for n in 0..k {
                let d = x[(i + 1) * k + n] - x[i * k + n];
                acc.add(d * d);
            }
        }
        self.gamma * acc.value()
    }

    fn objective_from_residual(&self, r: &[f64], x: &[f64]) -> f64 {
        let data: f64 = crate::numeric::sum(r.iter().map(|v| v * v));
        data + self.smoothing(x)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let r = self.residual_matrix(x);
        self.objective_from_residual(&r, x)
    }

    /// Objective value and gradient at `x`.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.k;
        let r = self.residual_matrix(x);
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (mi, (row, &(lo, hi))) in self.f.rows().iter().zip(&self.support).enumerate() {
            let rm = &r[mi * k..(mi + 1) * k];
            for i in lo..hi {
                let fi = -2.0 * row[i];
                let g = &mut grad[i * k..(i + 1) * k];
                for n in 0..k {
                    g[n] += fi * rm[n];
                }
            }
        }
        if self.gamma > 0.0 {
            let two_gamma = 2.0 * self.gamma;
            for i in 0..self.m - 1 {
                for n in 0..k {
                    let d = x[(i + 1) * k + n] - x[i * k + n];
                    grad[(i + 1) * k + n] += two_gamma * d;
                    grad[i * k + n] -= two_gamma * d;
                }
            }
        }
        self.objective_from_residual(&r, x)
    }

    /// Hessian-vector product for a single outcome row `v` (length `M`).
    fn hessian_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (row, &(lo, hi)) in self.f.rows().iter().zip(&self.support) {
            let fv: f64 = (lo..hi).map(|i| row[i] * v[i]).sum();
            for i in lo..hi {
                out[i] += 2.0 * row[i] * fv;
            }
        }
        if self.gamma > 0.0 {
            for i in 0..self.m - 1 {
                let d = 2.0 * self.gamma * (v[i + 1] - v[i]);
                out[i + 1] += d;
                out[i] -= d;
            }
        }
        out
    }

    /// Largest eigenvalue of the metric-scaled Hessian `W^-1/2 H W^-1/2`,
    /// by power iteration. This is the gradient's Lipschitz constant in the
    /// metric `W`.
    fn lipschitz(&self) -> f64 {
        let m = self.m;
        let inv_sqrt: Vec<f64> = self.metric.iter().map(|w| w.sqrt().recip()).collect();
        let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.5 * ((i * 7919) % 13) as f64 / 13.0).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mut lambda = 0.0;
        for _ in 0..300 {
            let scaled: Vec<f64> = v.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
            let hv = self.hessian_apply(&scaled);
            let w: Vec<f64> = hv.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            v = w.into_iter().map(|x| x / norm).collect();
            let settled = (norm - lambda).abs() <= 1e-9 * norm;
            lambda = norm;
            if settled {
                break;
            }
        }
        lambda
    }
}

fn project_columns(x: &mut [f64], k: usize) {
    for col in x.chunks_mut(k) {
        simplex_project_in_place(col);
    }
}

fn check_shapes(stats: &OutcomeStats, probes: &ProbeSet, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Shape(format!("need at least 2 outcomes, got {k}")));
    }
    if stats.num_probes() != probes.len() {
        return Err(Error::Shape(format!(
            "{} statistics rows for {} probes",
            stats.num_probes(),
            probes.len()
        )));
    }
    if stats.num_outcomes() != k {
        return Err(Error::Shape(format!(
            "statistics have {} outcomes, expected {k}",
            stats.num_outcomes()
        )));
    }
    Ok(())
}

/// Reconstructs a `K`-outcome POVM from coherent-probe statistics.
///
/// Starts from the uniform POVM `theta_n(i) = 1/K`. Non-convergence within
/// `max_iter` is reported through `converged = false`, not as an error.
pub fn reconstruct(
    stats: &OutcomeStats,
    probes: &ProbeSet,
    k: usize,
    config: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    config.validate()?;
    check_shapes(stats, probes, k)?;
    let f = ProbeMatrix::new(probes, config.dimension)?;
    reconstruct_with_matrix(stats.frequencies(), &f, k, config)
}

/// Same as [`reconstruct`] for an arbitrary probe matrix, e.g. idealized
/// Fock-state probes. `frequencies[m]` holds the `K` outcome frequencies of
/// probe row `m`.
pub fn reconstruct_with_matrix(
    frequencies: &[Vec<f64>],
    f: &ProbeMatrix,
    k: usize,
    config: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    config.validate()?;
    if k < 2 {
        return Err(Error::Shape(format!("need at least 2 outcomes, got {k}")));
    }
    if f.dimension() != config.dimension {
        return Err(Error::Shape(format!(
            "probe matrix dimension {} differs from configured dimension {}",
            f.dimension(),
            config.dimension
        )));
    }
    if frequencies.len() != f.num_probes() || frequencies.iter().any(|r| r.len() != k) {
        return Err(Error::Shape(format!(
            "frequency table must be {} x {k}",
            f.num_probes()
        )));
    }
    let m = config.dimension;
    let gamma = config.gamma.unwrap_or_else(|| {
        let norm_sq = crate::numeric::sum(frequencies.iter().flatten().map(|v| v * v));
        DEFAULT_GAMMA_SCALE * norm_sq / m as f64
    });
    let problem = Problem::new(f, frequencies, k, gamma);

    let mut x = vec![1.0 / k as f64; m * k];
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut z = vec![0.0; m * k];
    let mut grad = vec![0.0; m * k];
    let mut lipschitz = problem.lipschitz().max(f64::MIN_POSITIVE);
    let mut momentum = 1.0f64;
    let mut fx = problem.objective(&x);
    let mut history = vec![fx];
    let mut converged = fx == 0.0;
    let mut iterations = 0;

    while !converged && iterations < config.max_iter {
        iterations += 1;
        let fy = problem.value_and_gradient(&y, &mut grad);
        let fz = loop {
            for (i, w) in problem.metric.iter().enumerate() {
                let step = 1.0 / (lipschitz * w);
                for n in i * k..(i + 1) * k {
                    z[n] = y[n] - grad[n] * step;
                }
            }
            project_columns(&mut z, k);
            let fz = problem.objective(&z);
            let mut lin = CompensatedSum::new();
            let mut quad = CompensatedSum::new();
            for (idx, ((zi, yi), gi)) in z.iter().zip(&y).zip(&grad).enumerate() {
                let d = zi - yi;
                lin.add(gi * d);
                quad.add(problem.metric[idx / k] * d * d);
            }
            let model = fy + lin.value() + 0.5 * lipschitz * quad.value();
            if fz <= model + 1e-12 * fy.abs().max(f64::MIN_POSITIVE) || !lipschitz.is_finite() {
                break fz;
            }
            lipschitz *= 2.0;
        };

        if fz <= fx {
            let decrease = (fx - fz) / fx.max(f64::MIN_POSITIVE);
            std::mem::swap(&mut x_prev, &mut x);
            x.copy_from_slice(&z);
            fx = fz;
            let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next;
            momentum = next;
            for ((yi, xi), pi) in y.iter_mut().zip(&x).zip(&x_prev) {
                *yi = xi + beta * (xi - pi);
            }
            converged = decrease < config.tol || fx == 0.0;
        } else {
            // Momentum overshot: restart from the current iterate.
            momentum = 1.0;
            y.copy_from_slice(&x);
        }
        history.push(fx);
    }

    let residual_norm = {
        let r = problem.residual_matrix(&x);
        crate::numeric::sum(r.iter().map(|v| v * v)).sqrt()
    };
    let rows = (0..k)
        .map(|n| (0..m).map(|i| x[i * k + n]).collect())
        .collect();
    let povm = PovmSet::from_rows(rows)?;
    if !converged {
        log::warn!("reconstruction stopped after {iterations} iterations without converging");
    }
    Ok(ReconstructionResult {
        povm,
        residual: residual_norm,
        iterations,
        converged,
        gamma,
        objective_history: history,
    })
}

/// Frobenius norm `||P - F Pi^T||_F`.
pub fn residual(stats: &OutcomeStats, probes: &ProbeSet, povm: &PovmSet) -> Result<f64> {
    check_shapes(stats, probes, povm.num_outcomes())?;
    let f = ProbeMatrix::new(probes, povm.dimension())?;
    let exact = f.outcome_probabilities(povm)?;
    Ok(crate::numeric::sum(
        stats
            .frequencies()
            .iter()
            .zip(&exact)
            .flat_map(|(p, q)| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b))),
    )
    .sqrt())
}
