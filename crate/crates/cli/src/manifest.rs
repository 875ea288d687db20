//! Run manifest: a JSON file, command-line flags, or both (flags win).
//!
//! ```json
//! {
//!   "models": ["models/tmd4.json", "models/tmd8.json"],
//!   "seed": 7,
//!   "shots": 1000000,
//!   "probe_count": null,
//!   "mu_max": null,
//!   "gamma": null,
//!   "max_iter": 20000,
//!   "tol": 1e-10,
//!   "dimension": 5000,
//!   "output_dir": "out",
//!   "amp_uncertainty": 0.05,
//!   "trials": 20
//! }
//! ```
//!
//! Relative paths in the file are taken relative to the file's directory,
//! relative paths given as flags relative to the working directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::Args;
use muxtomo_core::models::DetectorModel;
use muxtomo_core::probe::DEFAULT_SHOTS;
use serde::Deserialize;

use crate::error::{read, CliError, Context, Result};

pub const DEFAULT_DIMENSION: usize = 5000;
pub const DEFAULT_TRIALS: usize = 20;

#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    /// Manifest JSON file.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Detector model JSON file; repeat for several detectors.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    /// Number of quadratic probes (default: automatic).
    #[arg(long)]
    pub probe_count: Option<usize>,
    /// Largest probe mean photon number (default: automatic).
    #[arg(long)]
    pub mu_max: Option<f64>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Smoothing weight (default: scaled to the data).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Comparison dimension M.
    #[arg(long)]
    pub dimension: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Relative probe amplitude uncertainty for figure-of-merit error bars.
    #[arg(long)]
    pub amp_uncertainty: Option<f64>,
    /// Repetitions used for the error bars.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    models: Vec<PathBuf>,
    probe_count: Option<usize>,
    mu_max: Option<f64>,
    shots: Option<u64>,
    seed: Option<u64>,
    gamma: Option<f64>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    dimension: Option<usize>,
    output_dir: Option<PathBuf>,
    amp_uncertainty: Option<f64>,
    trials: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Detector {
    /// File stem of the model file; prefixes every output of this detector.
    pub name: String,
    pub model: DetectorModel,
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub detectors: Vec<Detector>,
    pub probe_count: Option<usize>,
    pub mu_max: Option<f64>,
    pub shots: u64,
    pub seed: u64,
    pub gamma: Option<f64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub dimension: usize,
    pub output_dir: PathBuf,
    pub amp_uncertainty: f64,
    pub trials: usize,
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Manifest(msg.into())
}

impl RunManifest {
    /// Merges the manifest file (if any) with the flags, loads every model
    /// file and checks all values.
    pub fn load(args: &RunArgs) -> Result<Self> {
        let (file, base) = match &args.manifest {
            Some(path) => {
                let text = read(path)?;
                let file: ManifestFile = serde_json::from_str(&text)
                    .map_err(|e| bad(format!("{}: {e}", path.display())))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (file, base)
            }
            None => (ManifestFile::default(), PathBuf::new()),
        };

        let model_paths: Vec<PathBuf> = if args.models.is_empty() {
            file.models.into_iter().map(|p| resolve(&base, p)).collect()
        } else {
            args.models.clone()
        };
        let output_dir = match &args.output_dir {
            Some(p) => p.clone(),
            None => file.output_dir.map_or_else(|| base.clone(), |p| resolve(&base, p)),
        };
        let output_dir = if output_dir.as_os_str().is_empty() {
            PathBuf::from(".")
        } else {
            output_dir
        };

        let manifest = RunManifest {
            detectors: load_detectors(&model_paths)?,
            probe_count: args.probe_count.or(file.probe_count),
            mu_max: args.mu_max.or(file.mu_max),
            shots: args.shots.or(file.shots).unwrap_or(DEFAULT_SHOTS),
            seed: args
                .seed
                .or(file.seed)
                .ok_or_else(|| bad("a seed is required"))?,
            gamma: args.gamma.or(file.gamma),
            max_iter: args.max_iter.or(file.max_iter),
            tol: args.tol.or(file.tol),
            dimension: args.dimension.or(file.dimension).unwrap_or(DEFAULT_DIMENSION),
            output_dir,
            amp_uncertainty: args.amp_uncertainty.or(file.amp_uncertainty).unwrap_or(0.0),
            trials: args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
        };
        manifest.check()?;
        Ok(manifest)
    }

    fn check(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(bad("shots must be at least 1"));
        }
        if self.dimension < 2 {
            return Err(bad(format!("dimension {} must be at least 2", self.dimension)));
        }
        if let Some(c) = self.probe_count {
            if c < 2 {
                return Err(bad(format!("probe_count {c} must be at least 2")));
            }
        }
        if let Some(mu) = self.mu_max {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(bad(format!("mu_max {mu} must be positive")));
            }
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(bad(format!("gamma {g} must be nonnegative")));
            }
        }
        if self.max_iter == Some(0) {
            return Err(bad("max_iter must be at least 1"));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(bad(format!("tol {t} must be positive")));
            }
        }
        if !(0.0..0.5).contains(&self.amp_uncertainty) {
            return Err(bad(format!(
                "amp_uncertainty {} outside [0, 0.5)",
                self.amp_uncertainty
            )));
        }
        if self.amp_uncertainty > 0.0 && self.trials < 2 {
            return Err(bad(format!("trials {} must be at least 2", self.trials)));
        }
        Ok(())
    }
}

fn load_detectors(paths: &[PathBuf]) -> Result<Vec<Detector>> {
    if paths.is_empty() {
        return Err(bad("no detector model given"));
    }
    let mut names = BTreeSet::new();
    paths
        .iter()
        .map(|path| {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .filter(|s| !s.is_empty())
                .ok_or_else(|| bad(format!("cannot name a detector after {}", path.display())))?
                .to_string();
            if !names.insert(name.clone()) {
                return Err(bad(format!("two model files are named {name}")));
            }
            let model = DetectorModel::from_json(&read(path)?).context(path.display().to_string())?;
            Ok(Detector { name, model })
        })
        .collect()
}
