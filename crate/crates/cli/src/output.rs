//! Result tables, JSON summaries and run manifests.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use contagion_core::ensemble::{CouplingSweep, FractionSweep};
use contagion_core::{EnsembleResult, ExperimentConfig, TopologyKind};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const CSV_HEADER: [&str; 6] = [
    "f_or_q",
    "crisis_F",
    "crisis_F_shadow",
    "crisis_F_regulated",
    "baseline_b",
    "baseline_c",
];

/// One grid point of an experiment. Baselines exist only for the mixing
/// topologies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub f_or_q: f64,
    pub crisis_f: usize,
    pub crisis_f_shadow: usize,
    pub crisis_f_regulated: usize,
    pub baseline_b: Option<usize>,
    pub baseline_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub f_or_q: f64,
    pub result: EnsembleResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homogeneous: Option<EnsembleResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub every_shadow_fails: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<Ratios>,
}

/// R(q) per curve; `null` where F(0) = 0 leaves it undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub total: Option<f64>,
    pub shadow: Option<f64>,
    pub regulated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub topology: TopologyKind,
    pub n_banks: usize,
    pub samples: usize,
    pub shock_scale: f64,
    pub points: Vec<PointSummary>,
}

impl Summary {
    pub fn from_fractions(config: &ExperimentConfig, name: &str, sweep: FractionSweep) -> Self {
        let points = sweep
            .points
            .into_iter()
            .map(|p| PointSummary {
                f_or_q: p.shadow_fraction,
                result: p.heterogeneous,
                homogeneous: Some(p.homogeneous),
                every_shadow_fails: Some(p.every_shadow_fails),
                ratio: None,
            })
            .collect();
        Self::new(config, name, points)
    }

    pub fn from_coupling(config: &ExperimentConfig, name: &str, sweep: CouplingSweep) -> Self {
        let points = sweep
            .points
            .into_iter()
            .map(|p| PointSummary {
                f_or_q: p.relative_coupling,
                result: p.result,
                homogeneous: None,
                every_shadow_fails: None,
                ratio: Some(Ratios {
                    total: p.ratio_total,
                    shadow: p.ratio_shadow,
                    regulated: p.ratio_regulated,
                }),
            })
            .collect();
        Self::new(config, name, points)
    }

    pub fn from_single(config: &ExperimentConfig, name: &str, result: EnsembleResult) -> Self {
        let point = PointSummary {
            f_or_q: config.grid_value(),
            result,
            homogeneous: None,
            every_shadow_fails: None,
            ratio: None,
        };
        Self::new(config, name, vec![point])
    }

    fn new(config: &ExperimentConfig, name: &str, points: Vec<PointSummary>) -> Self {
        Summary {
            experiment: name.to_string(),
            topology: config.topology,
            n_banks: config.total_banks(),
            samples: config.samples,
            shock_scale: config.shock_scale,
            points,
        }
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        self.points
            .iter()
            .map(|p| ResultRow {
                f_or_q: p.f_or_q,
                crisis_f: p.result.crisis_f,
                crisis_f_shadow: p.result.crisis_f_shadow,
                crisis_f_regulated: p.result.crisis_f_regulated,
                baseline_b: p.homogeneous.as_ref().map(|h| h.crisis_f),
                baseline_c: p.every_shadow_fails,
            })
            .collect()
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |x: Option<String>| x.unwrap_or_default();
    for r in rows {
        w.write_record([
            r.f_or_q.to_string(),
            r.crisis_f.to_string(),
            r.crisis_f_shadow.to_string(),
            r.crisis_f_regulated.to_string(),
            opt(r.baseline_b.map(|b| b.to_string())),
            opt(r.baseline_c.map(|c| c.to_string())),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Fully resolved configuration, including the shock amplitude used.
    pub config: RunConfig,
    pub artifacts: Vec<PathBuf>,
    pub calibration_scale: f64,
    pub version: String,
    pub wall_time_seconds: f64,
}
