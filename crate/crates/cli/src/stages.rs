//! Per-detector pipeline stages. Each stage computes in memory; files are
//! written only once every detector has finished.

use std::path::PathBuf;

use muxtomo_core::analysis::{
    all_outcome_metrics, figures_of_merit, total_info, uncertainty_bars, FiguresOfMerit, FitFamily,
    FitOptions, OutcomeMetrics,
};
use muxtomo_core::io::{povm_from_json, povm_to_csv, povm_to_json, stats_from_csv, stats_to_csv, ReconstructionReport};
use muxtomo_core::pipeline::ProbePlan;
use muxtomo_core::povm::DEFAULT_SATURATION_EPSILON;
use muxtomo_core::probe::{adequate_dimension, simulate_outcomes, OutcomeStats, ProbeSet};
use muxtomo_core::tomography::{reconstruct, ReconstructionConfig, ReconstructionResult};
use muxtomo_core::{Error, PovmSet};
use serde::Serialize;

use crate::error::{read, Context, Result};
use crate::manifest::{Detector, RunManifest};

/// File name and contents waiting to be written.
pub type OutputFile = (PathBuf, String);

pub struct Stage<'a> {
    pub manifest: &'a RunManifest,
    pub index: usize,
    pub detector: &'a Detector,
}

impl Stage<'_> {
    fn path(&self, suffix: &str) -> PathBuf {
        self.manifest
            .output_dir
            .join(format!("{}.{suffix}", self.detector.name))
    }

    fn ctx(&self, what: &str) -> String {
        format!("{} ({what})", self.detector.name)
    }

    /// Model POVM at the comparison dimension.
    pub fn model(&self) -> Result<PovmSet> {
        self.detector
            .model
            .povm(self.manifest.dimension)
            .context(self.ctx("model"))
    }

    pub fn model_files(&self, povm: &PovmSet) -> Vec<OutputFile> {
        vec![
            (self.path("model.povm.json"), povm_to_json(povm)),
            (self.path("model.povm.csv"), povm_to_csv(povm)),
        ]
    }

    pub fn probes(&self, model: &PovmSet) -> Result<ProbeSet> {
        let plan = ProbePlan::for_model(model, DEFAULT_SATURATION_EPSILON)
            .with_overrides(self.manifest.mu_max, self.manifest.probe_count);
        plan.reconstruction_dimension(self.manifest.dimension)
            .context(self.ctx("probe plan"))?;
        plan.probes().context(self.ctx("probe plan"))
    }

    fn seed(&self) -> u64 {
        self.manifest.seed.wrapping_add((self.index as u64) << 32)
    }

    pub fn simulate(&self, model: &PovmSet) -> Result<(ProbeSet, OutcomeStats)> {
        let probes = self.probes(model)?;
        let stats = simulate_outcomes(model, &probes, self.manifest.shots, self.seed())
            .context(self.ctx("simulate"))?;
        Ok((probes, stats))
    }

    pub fn simulation_files(&self, probes: &ProbeSet, stats: &OutcomeStats) -> Vec<OutputFile> {
        vec![
            (self.path("probes.json"), probes.to_json()),
            (self.path("stats.csv"), stats_to_csv(stats)),
        ]
    }

    pub fn read_stats(&self) -> Result<OutcomeStats> {
        let path = self.path("stats.csv");
        stats_from_csv(&read(&path)?).context(path.display().to_string())
    }

    fn outcomes(&self) -> usize {
        self.detector.model.bins() + 1
    }

    fn config(&self, probes: &ProbeSet) -> Result<ReconstructionConfig> {
        let required = adequate_dimension(probes.max_mean());
        if required > self.manifest.dimension {
            return Err(Error::Truncation {
                mean: probes.max_mean(),
                dimension: self.manifest.dimension,
                required,
            })
            .context(self.ctx("reconstruct"));
        }
        let mut config = ReconstructionConfig::new(required);
        config.gamma = self.manifest.gamma;
        if let Some(n) = self.manifest.max_iter {
            config.max_iter = n;
        }
        if let Some(t) = self.manifest.tol {
            config.tol = t;
        }
        Ok(config)
    }

    pub fn reconstruct(&self, stats: &OutcomeStats) -> Result<ReconstructionResult> {
        let probes = ProbeSet::new(stats.means().to_vec()).context(self.ctx("reconstruct"))?;
        let config = self.config(&probes)?;
        let result = reconstruct(stats, &probes, self.outcomes(), &config).context(self.ctx("reconstruct"))?;
        if !result.converged {
            log::warn!(
                "{}: reconstruction stopped after {} iterations without converging",
                self.detector.name,
                result.iterations
            );
        }
        Ok(result)
    }

    pub fn reconstruction_files(&self, result: &ReconstructionResult) -> Vec<OutputFile> {
        let report = serde_json::to_string_pretty(&ReconstructionReport::from(result)).expect("report serializes");
        vec![
            (self.path("recon.povm.json"), povm_to_json(&result.povm)),
            (self.path("recon.povm.csv"), povm_to_csv(&result.povm)),
            (self.path("recon.report.json"), report + "\n"),
        ]
    }

    pub fn read_reconstruction(&self) -> Result<PovmSet> {
        let path = self.path("recon.povm.json");
        povm_from_json(&read(&path)?).context(path.display().to_string())
    }

    /// Outcome metrics of model and reconstruction at the comparison
    /// dimension, plus fitted figures of merit. `stats` is needed only for
    /// error bars.
    pub fn analyze(&self, model: &PovmSet, recon: &PovmSet, stats: Option<&OutcomeStats>) -> Result<DetectorMetrics> {
        let extended = recon
            .extend_to(self.manifest.dimension, DEFAULT_SATURATION_EPSILON)
            .context(self.ctx("analyze"))?;
        let family = FitFamily::from(&self.detector.model);
        let options = FitOptions::default();
        let fit = match stats {
            Some(stats) if self.manifest.amp_uncertainty > 0.0 => {
                let probes = ProbeSet::new(stats.means().to_vec()).context(self.ctx("analyze"))?;
                let config = self.config(&probes)?;
                uncertainty_bars(
                    stats,
                    &probes,
                    self.outcomes(),
                    &config,
                    family,
                    self.manifest.amp_uncertainty,
                    self.manifest.trials,
                    self.seed(),
                    &options,
                )
            }
            _ => figures_of_merit(recon, family, &options),
        };
        let figures_of_merit = match fit {
            Ok(f) => Some(f),
            Err(e @ Error::FitDivergence { .. }) => {
                log::warn!("{}: {e}", self.detector.name);
                None
            }
            Err(e) => return Err(e).context(self.ctx("figures of merit")),
        };
        Ok(DetectorMetrics {
            name: self.detector.name.clone(),
            model_outcomes: all_outcome_metrics(model),
            outcomes: all_outcome_metrics(&extended),
            figures_of_merit,
        })
    }

    pub fn plot_files(&self, metrics: &DetectorMetrics) -> Vec<OutputFile> {
        vec![
            (self.path("plot.csv"), plot_csv(&metrics.outcomes)),
            (self.path("model.plot.csv"), plot_csv(&metrics.model_outcomes)),
        ]
    }
}

#[derive(Debug, Serialize)]
pub struct DetectorMetrics {
    pub name: String,
    /// Reconstructed POVM, `null` for outcomes that never occur.
    pub outcomes: Vec<Option<OutcomeMetrics>>,
    pub model_outcomes: Vec<Option<OutcomeMetrics>>,
    /// `null` when the fit diverged.
    pub figures_of_merit: Option<FiguresOfMerit>,
}

#[derive(Debug, Serialize)]
struct MetricsFile<'a> {
    dimension: usize,
    h_total_bits: f64,
    detectors: &'a [DetectorMetrics],
}

const PLOT_HEADER: &str = "n,purity,effective_states,missing_bits,extracted_bits";

fn metric_fields(row: &Option<OutcomeMetrics>) -> String {
    match row {
        Some(m) => format!(
            "{},{},{},{}",
            m.purity, m.effective_states, m.missing_bits, m.extracted_bits
        ),
        None => ",,,".to_string(),
    }
}

fn plot_csv(rows: &[Option<OutcomeMetrics>]) -> String {
    let mut out = format!("{PLOT_HEADER}\n");
    for (n, row) in rows.iter().enumerate() {
        out.push_str(&format!("{n},{}\n", metric_fields(row)));
    }
    out
}

/// `metrics.json` and `comparison.csv` across all detectors.
pub fn summary_files(manifest: &RunManifest, metrics: &[DetectorMetrics]) -> Vec<OutputFile> {
    let file = MetricsFile {
        dimension: manifest.dimension,
        h_total_bits: total_info(manifest.dimension),
        detectors: metrics,
    };
    let json = serde_json::to_string_pretty(&file).expect("metrics serialize") + "\n";

    let mut csv = format!("detector,source,{PLOT_HEADER}\n");
    for d in metrics {
        for (source, rows) in [("model", &d.model_outcomes), ("reconstruction", &d.outcomes)] {
            for (n, row) in rows.iter().enumerate() {
                csv.push_str(&format!("{},{source},{n},{}\n", d.name, metric_fields(row)));
            }
        }
    }
    vec![
        (manifest.output_dir.join("metrics.json"), json),
        (manifest.output_dir.join("comparison.csv"), csv),
    ]
}
