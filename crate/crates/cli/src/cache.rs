//! On-disk cache of calibrated shock amplitudes, one small text file per
//! (M, γ, p, μ).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use contagion_core::shocks::{calibrate_amplitude, CalibrationTarget};

pub const CACHE_DIR_VAR: &str = "CONTAGION_CACHE_DIR";
const DEFAULT_CACHE_DIR: &str = ".contagion-cache";

pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
}

fn entry_path(dir: &Path, t: &CalibrationTarget) -> PathBuf {
    dir.join(format!(
        "scale_M{}_gamma{}_p{}_dof{}.txt",
        t.n_assets, t.gamma, t.target_p, t.dof
    ))
}

fn read_entry(path: &Path) -> Option<f64> {
    let text = fs::read_to_string(path).ok()?;
    let s: f64 = text.lines().find_map(|l| l.strip_prefix("scale="))?.trim().parse().ok()?;
    (s.is_finite() && s > 0.0).then_some(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachedScale {
    pub scale: f64,
    pub hit: bool,
}

/// Returns the cached amplitude for `target`, calibrating and storing it on
/// a miss. Unreadable entries are recomputed.
pub fn calibrated_scale(dir: &Path, target: &CalibrationTarget) -> Result<CachedScale> {
    let path = entry_path(dir, target);
    if let Some(scale) = read_entry(&path) {
        return Ok(CachedScale { scale, hit: true });
    }
    let cal = calibrate_amplitude(target)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let body = format!(
        "n_assets={}\ngamma={}\ntarget_p={}\ndof={}\ntrials={}\nestimated_p={}\nscale={}\n",
        target.n_assets, target.gamma, target.target_p, target.dof, target.trials, cal.estimated_p, cal.scale
    );
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(CachedScale {
        scale: cal.scale,
        hit: false,
    })
}
