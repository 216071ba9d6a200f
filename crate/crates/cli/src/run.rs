//! Experiment execution and artifact writing.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use contagion_core::ensemble::{run_ensemble, sweep_f, sweep_q};
use contagion_core::shocks::{CalibrationTarget, DEFAULT_CALIBRATION_TRIALS};
use contagion_core::TopologyKind;

use crate::cache;
use crate::config::RunConfig;
use crate::output::{write_csv, RunManifest, Summary};

pub fn calibration_target(config: &RunConfig) -> CalibrationTarget {
    CalibrationTarget {
        n_assets: config.shock.n_assets,
        gamma: config.shock.calibration_gamma,
        target_p: config.shock.target_p,
        dof: config.shock.dof,
        trials: DEFAULT_CALIBRATION_TRIALS,
        ..CalibrationTarget::default()
    }
}

/// The configured amplitude, or the cached calibration for the config's
/// (M, γ, p, μ).
pub fn resolve_scale(config: &RunConfig) -> Result<f64> {
    match config.shock.scale {
        Some(s) => Ok(s),
        None => Ok(cache::calibrated_scale(&cache::cache_dir(), &calibration_target(config))?.scale),
    }
}

/// Runs the configured ensemble, or its sweep when a grid is present.
pub fn execute(config: &RunConfig, scale: f64, workers: usize) -> Result<Summary> {
    let experiment = config.experiment(scale, workers)?;
    let name = &config.experiment.name;
    Ok(match (config.grid(), experiment.topology) {
        (Some(grid), TopologyKind::Layered) => Summary::from_coupling(&experiment, name, sweep_q(&experiment, grid)?),
        (Some(grid), _) => Summary::from_fractions(&experiment, name, sweep_f(&experiment, grid)?),
        (None, TopologyKind::Layered) => Summary::from_single(&experiment, name, run_ensemble(&experiment)?),
        (None, _) => {
            let f = experiment.shadow_fraction;
            Summary::from_fractions(&experiment, name, sweep_f(&experiment, &[f])?)
        }
    })
}

fn timestamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%S%3fZ").to_string()
}

fn unique_stem(dir: &Path, name: &str) -> String {
    let base = format!("{name}_{}", timestamp());
    let mut stem = base.clone();
    let mut k = 1;
    while dir.join(format!("{stem}.csv")).exists() {
        stem = format!("{base}-{k}");
        k += 1;
    }
    stem
}

/// Runs `config` and writes `<name>_<timestamp>.csv`, `.json` and
/// `.manifest.json` into `out_dir`. Returns the manifest.
pub fn run_and_write(config: &RunConfig, workers: usize, out_dir: &Path) -> Result<(RunManifest, PathBuf)> {
    if config.experiment.name.is_empty() || config.experiment.name.contains(['/', '\\']) {
        bail!("experiment.name must be a plain, non-empty file-name stem");
    }
    let started = Instant::now();
    let scale = resolve_scale(config)?;
    let mut resolved = config.clone();
    resolved.shock.scale = Some(scale);
    let summary = execute(&resolved, scale, workers)?;

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let stem = unique_stem(out_dir, &resolved.experiment.name);
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let json_path = out_dir.join(format!("{stem}.json"));
    let manifest_path = out_dir.join(format!("{stem}.manifest.json"));

    let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_csv(&summary.rows(), BufWriter::new(file))?;
    fs::write(&json_path, serde_json::to_string_pretty(&summary)?)?;

    let manifest = RunManifest {
        config: resolved,
        artifacts: vec![csv_path.clone(), json_path],
        calibration_scale: scale,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok((manifest, csv_path))
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}
