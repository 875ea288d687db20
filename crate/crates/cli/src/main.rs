//! `muxtomo`: model, simulate, reconstruct and analyze multiplexed detectors.
//!
//! Exit codes: 0 on success (a reconstruction that did not converge is only
//! flagged in its report), 2 for bad input, 3 when a numerical precondition
//! fails (saturation, truncation, range, fit divergence).

mod error;
mod manifest;
mod stages;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use error::{CliError, Result};
use manifest::{RunArgs, RunManifest};
use stages::{summary_files, OutputFile, Stage};

#[derive(Parser)]
#[command(name = "muxtomo", version, about = "Multiplexed detector tomography pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// More log output; repeat for debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Write the model POVM of every detector.
    Model(RunArgs),
    /// Simulate coherent-probe outcome statistics.
    Simulate(RunArgs),
    /// Reconstruct POVMs from the statistics files.
    Reconstruct(RunArgs),
    /// Purity, information and figures of merit of the reconstructions.
    Analyze(RunArgs),
    /// model, simulate, reconstruct and analyze in one run.
    All(RunArgs),
}

fn per_detector<T: Send>(
    manifest: &RunManifest,
    f: impl Fn(&Stage) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    manifest
        .detectors
        .par_iter()
        .enumerate()
        .map(|(index, detector)| {
            f(&Stage {
                manifest,
                index,
                detector,
            })
        })
        .collect()
}

fn run(command: &Command) -> Result<()> {
    let (args, which) = match command {
        Command::Model(a) => (a, "model"),
        Command::Simulate(a) => (a, "simulate"),
        Command::Reconstruct(a) => (a, "reconstruct"),
        Command::Analyze(a) => (a, "analyze"),
        Command::All(a) => (a, "all"),
    };
    let manifest = RunManifest::load(args)?;
    log::info!("{which}: {} detector(s)", manifest.detectors.len());

    let files: Vec<OutputFile> = match command {
        Command::Model(_) => per_detector(&manifest, |s| Ok(s.model_files(&s.model()?)))?
            .concat(),
        Command::Simulate(_) => per_detector(&manifest, |s| {
            let (probes, stats) = s.simulate(&s.model()?)?;
            Ok(s.simulation_files(&probes, &stats))
        })?
        .concat(),
        Command::Reconstruct(_) => {
            per_detector(&manifest, |s| Ok(s.reconstruction_files(&s.reconstruct(&s.read_stats()?)?)))?
                .concat()
        }
        Command::Analyze(_) => {
            let results = per_detector(&manifest, |s| {
                let stats = if manifest.amp_uncertainty > 0.0 {
                    Some(s.read_stats()?)
                } else {
                    None
                };
                let metrics = s.analyze(&s.model()?, &s.read_reconstruction()?, stats.as_ref())?;
                Ok((s.plot_files(&metrics), metrics))
            })?;
            collect_analysis(&manifest, results)
        }
        Command::All(_) => {
            let results = per_detector(&manifest, |s| {
                let model = s.model()?;
                let (probes, stats) = s.simulate(&model)?;
                let result = s.reconstruct(&stats)?;
                let metrics = s.analyze(&model, &result.povm, Some(&stats))?;
                let mut files = s.model_files(&model);
                files.extend(s.simulation_files(&probes, &stats));
                files.extend(s.reconstruction_files(&result));
                files.extend(s.plot_files(&metrics));
                Ok((files, metrics))
            })?;
            collect_analysis(&manifest, results)
        }
    };
    write_all(&manifest.output_dir, &files)
}

fn collect_analysis(
    manifest: &RunManifest,
    results: Vec<(Vec<OutputFile>, stages::DetectorMetrics)>,
) -> Vec<OutputFile> {
    let (files, metrics): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let mut files = files.concat();
    files.extend(summary_files(manifest, &metrics));
    files
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes each file to a temporary sibling and renames it into place.
fn write_all(dir: &Path, files: &[OutputFile]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (path, contents) in files {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
        let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
        let mut f = std::fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(contents.as_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        std::fs::rename(&tmp, path).map_err(io_err(path))?;
        log::debug!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("muxtomo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
