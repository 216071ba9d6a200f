//! Experiment files: TOML with `[experiment]`, `[network]`, `[system]`,
//! `[shock]` and an optional `[sweep]` section. Unknown keys are errors.

use std::path::Path;

use anyhow::{bail, Context, Result};
use contagion_core::{ExperimentConfig, SystemParams, TopologyKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fig4,
    Fig5,
    Fig6,
}

impl Preset {
    pub fn source(self) -> &'static str {
        match self {
            Preset::Fig4 => include_str!("../../../presets/fig4.toml"),
            Preset::Fig5 => include_str!("../../../presets/fig5.toml"),
            Preset::Fig6 => include_str!("../../../presets/fig6.toml"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentSection,
    pub network: NetworkSection,
    pub system: SystemSection,
    pub shock: ShockSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub topology: TopologyKind,
    pub samples: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Banks in the system, or per layer for the layered topology.
    pub n_banks: usize,
    pub denseness: f64,
    pub concentration: f64,
    pub concentration_tolerance: f64,
    pub shadow_fraction: f64,
    pub relative_coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub interbank_ratio: f64,
    pub gamma_shadow: f64,
    pub gamma_regulated: f64,
    #[serde(default)]
    pub homogeneous_gamma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSection {
    pub n_assets: usize,
    pub dof: f64,
    pub calibration_gamma: f64,
    pub target_p: f64,
    /// Fixed amplitude; calibrated (and cached) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub grid: Vec<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub n_banks: Option<usize>,
    pub concentration: Option<f64>,
    pub grid: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn preset(p: Preset) -> Self {
        Self::parse(p.source()).expect("shipped presets parse")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.samples {
            self.experiment.samples = s;
        }
        if let Some(s) = o.seed {
            self.experiment.master_seed = s;
        }
        if let Some(n) = o.n_banks {
            self.network.n_banks = n;
        }
        if let Some(c) = o.concentration {
            self.network.concentration = c;
        }
        if let Some(g) = &o.grid {
            self.sweep = Some(SweepSection { grid: g.clone() });
        }
    }

    pub fn grid(&self) -> Option<&[f64]> {
        self.sweep.as_ref().map(|s| s.grid.as_slice())
    }

    /// The core configuration, with `scale` as the shock amplitude.
    pub fn experiment(&self, scale: f64, workers: usize) -> Result<ExperimentConfig> {
        if self.system.homogeneous_gamma && self.experiment.topology != TopologyKind::Layered {
            bail!(
                "system.homogeneous_gamma: mixing topologies always report the homogeneous baseline \
                 in the baseline_b column; leave it unset"
            );
        }
        let config = ExperimentConfig {
            topology: self.experiment.topology,
            homogeneous_gamma: self.system.homogeneous_gamma,
            n_banks: self.network.n_banks,
            n_assets: self.shock.n_assets,
            system: SystemParams {
                interbank_ratio: self.system.interbank_ratio,
                gamma_shadow: self.system.gamma_shadow,
                gamma_regulated: self.system.gamma_regulated,
            },
            denseness: self.network.denseness,
            concentration: self.network.concentration,
            concentration_tolerance: self.network.concentration_tolerance,
            shadow_fraction: self.network.shadow_fraction,
            relative_coupling: self.network.relative_coupling,
            dof: self.shock.dof,
            shock_scale: scale,
            samples: self.experiment.samples,
            master_seed: self.experiment.master_seed,
            workers,
        };
        config.validate()?;
        Ok(config)
    }
}
