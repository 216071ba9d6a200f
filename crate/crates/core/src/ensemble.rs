//! Monte Carlo harness.
//!
//! Every sample regenerates the whole system (network, loans, balance
//! sheets, portfolios, price shock) from seeds derived from the master seed
//! and the sample index, runs the cascade and records the bankruptcy counts.
//! The crisis statistic is the 999th 1000-quantile of the total count.
//!
//! Sweeps reuse each sample's draws across grid points: sample `i` at
//! `f = 0.1` and at `f = 0.2` sees the same network and the same shock.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balsheet::{self, SystemParams};
use crate::cascade::{run_cascade, CascadeOutcome};
use crate::error::{Error, Result};
use crate::netgen::{self, WeightedNetwork};
use crate::seeds::{self, stream};
use crate::shocks::{self, PriceShock, DEFAULT_DOF};

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_CONCENTRATION_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    RandomMixing,
    AssetCorrelated,
    Layered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub topology: TopologyKind,
    /// Replace every bank's equity ratio with the system average Σc/Σa.
    pub homogeneous_gamma: bool,
    /// Banks in the system, or per layer for [`TopologyKind::Layered`].
    pub n_banks: usize,
    pub n_assets: usize,
    pub system: SystemParams,
    pub denseness: f64,
    pub concentration: f64,
    pub concentration_tolerance: f64,
    /// f, used by the mixing topologies.
    pub shadow_fraction: f64,
    /// q, used by the layered topology.
    pub relative_coupling: f64,
    pub dof: f64,
    /// Price-shock amplitude; 0 switches shocks off.
    pub shock_scale: f64,
    pub samples: usize,
    pub master_seed: u64,
    /// Worker threads, 0 for one per core. Never changes results.
    pub workers: usize,
}

impl ExperimentConfig {
    /// Baseline parameters of the shadow-banking experiments: M = 2,
    /// θ = 0.3, γ_s = 0.06, γ_r = 0.1, κ = 0.05, ρ = 0.25, 500 banks
    /// (per layer when layered), 1000 samples.
    pub fn standard(topology: TopologyKind, shock_scale: f64) -> Self {
        ExperimentConfig {
            topology,
            homogeneous_gamma: false,
            n_banks: 500,
            n_assets: 2,
            system: SystemParams {
                interbank_ratio: 0.3,
                gamma_shadow: 0.06,
                gamma_regulated: 0.1,
            },
            denseness: 0.05,
            concentration: 0.25,
            concentration_tolerance: DEFAULT_CONCENTRATION_TOLERANCE,
            shadow_fraction: if topology == TopologyKind::Layered { 0.5 } else { 0.0 },
            relative_coupling: 0.0,
            dof: DEFAULT_DOF,
            shock_scale,
            samples: DEFAULT_SAMPLES,
            master_seed: 1,
            workers: 0,
        }
    }

    /// Total number of banks in the system.
    pub fn total_banks(&self) -> usize {
        match self.topology {
            TopologyKind::Layered => 2 * self.n_banks,
            _ => self.n_banks,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let unit = |name: &'static str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must lie in [0, 1], got {x}")))
            }
        };
        unit("shadow_fraction", self.shadow_fraction)?;
        unit("relative_coupling", self.relative_coupling)?;
        if self.samples == 0 {
            return Err(Error::invalid("samples", "must be ≥ 1"));
        }
        if self.n_banks < 2 {
            return Err(Error::invalid("n_banks", format!("need at least 2, got {}", self.n_banks)));
        }
        if self.n_assets == 0 {
            return Err(Error::invalid("n_assets", "must be ≥ 1"));
        }
        if !(self.shock_scale >= 0.0 && self.shock_scale.is_finite()) {
            return Err(Error::invalid("shock_scale", format!("must be ≥ 0, got {}", self.shock_scale)));
        }
        if !(self.dof > 0.0) {
            return Err(Error::invalid("dof", format!("must be positive, got {}", self.dof)));
        }
        Ok(())
    }

    fn sample_seed(&self, index: usize, tag: u64) -> u64 {
        seeds::derive_seed(self.master_seed, &[index as u64, tag])
    }

    /// The config's own f, or q for the layered topology.
    pub fn grid_value(&self) -> f64 {
        match self.topology {
            TopologyKind::Layered => self.relative_coupling,
            _ => self.shadow_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub total: usize,
    pub shadow: usize,
    pub regulated: usize,
}

impl From<&CascadeOutcome> for FailureCounts {
    fn from(o: &CascadeOutcome) -> Self {
        FailureCounts {
            total: o.total,
            shadow: o.shadow,
            regulated: o.regulated,
        }
    }
}

/// One sample at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOutcome {
    pub heterogeneous: FailureCounts,
    pub homogeneous: Option<FailureCounts>,
    /// Σc over the heterogeneous system (the homogeneous one carries the same).
    pub total_capital: f64,
}

/// The 999th 1000-quantile: element `⌈0.999 S⌉ − 1` of the ascending sort.
pub fn quantile_999(values: &[usize]) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::Empty("quantile sample"));
    }
    let mut v = values.to_vec();
    let k = (999 * v.len()).div_ceil(1000) - 1;
    let (_, x, _) = v.select_nth_unstable(k);
    Ok(*x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    /// Empirical P(F) as sample counts.
    pub histogram: BTreeMap<usize, usize>,
    pub crisis_f: usize,
    pub crisis_f_shadow: usize,
    pub crisis_f_regulated: usize,
    pub samples_run: usize,
    pub n_banks: usize,
}

impl EnsembleResult {
    /// Class counts come from the sample that realizes the total-F quantile;
    /// among tied samples the one with the most shadow failures wins.
    pub fn from_counts(counts: &[FailureCounts], n_banks: usize) -> Result<Self> {
        let totals: Vec<usize> = counts.iter().map(|c| c.total).collect();
        let crisis_f = quantile_999(&totals)?;
        let scenario = counts
            .iter()
            .filter(|c| c.total == crisis_f)
            .max_by_key(|c| c.shadow)
            .copied()
            .unwrap_or_default();
        let mut histogram = BTreeMap::new();
        for &t in &totals {
            *histogram.entry(t).or_insert(0) += 1;
        }
        Ok(EnsembleResult {
            histogram,
            crisis_f,
            crisis_f_shadow: scenario.shadow,
            crisis_f_regulated: scenario.regulated,
            samples_run: counts.len(),
            n_banks,
        })
    }
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    Ok(pool.install(job))
}

/// Builds the labelled, weighted network of sample `index` at every grid value.
fn sample_networks(config: &ExperimentConfig, index: usize, grid: &[f64]) -> Result<Vec<WeightedNetwork>> {
    let topo_seed = config.sample_seed(index, stream::TOPOLOGY);
    match config.topology {
        TopologyKind::Layered => {
            netgen::layered_topologies(config.n_banks, config.denseness, grid, topo_seed)?
                .into_iter()
                .map(|t| netgen::assign_weights(t, config.concentration, config.concentration_tolerance))
                .collect()
        }
        kind => {
            let topology = netgen::generate_scale_free(config.n_banks, config.denseness, topo_seed)?;
            let base = netgen::assign_weights(topology, config.concentration, config.concentration_tolerance)?;
            let mix_seed = config.sample_seed(index, stream::MIXING);
            grid.iter()
                .map(|&f| {
                    let labelled = match kind {
                        TopologyKind::RandomMixing => netgen::mix_random(base.topology().clone(), f, mix_seed)?,
                        _ => netgen::mix_asset_correlated(&base, &config.system, f)?,
                    };
                    base.clone().relabel(labelled)
                })
                .collect()
        }
    }
}

/// The labelled, weighted network of sample `index` at the config's own f or q.
pub fn sample_network(config: &ExperimentConfig, index: usize) -> Result<WeightedNetwork> {
    config.validate()?;
    Ok(sample_networks(config, index, &[config.grid_value()])?.remove(0))
}

/// Runs sample `index` at every grid value; with `baseline` the cascade is
/// rerun on the homogeneous-γ̄ sheets of the same draw.
pub fn simulate_sample(
    config: &ExperimentConfig,
    index: usize,
    grid: &[f64],
    baseline: bool,
) -> Result<Vec<SampleOutcome>> {
    let networks = sample_networks(config, index, grid)?;
    let n = config.total_banks();
    let portfolio = shocks::sample_portfolio(n, config.n_assets, config.sample_seed(index, stream::PORTFOLIO))?;
    let shock = if config.shock_scale == 0.0 {
        PriceShock::none(config.n_assets)
    } else {
        shocks::sample_shock(
            config.n_assets,
            config.shock_scale,
            config.dof,
            config.sample_seed(index, stream::SHOCK),
        )?
    };
    networks
        .iter()
        .map(|network| {
            let sheets = balsheet::synthesize(network, &config.system)?;
            let outcome = run_cascade(&sheets, network, &portfolio, &shock)?;
            let homogeneous = if baseline {
                let gamma_bar = balsheet::average_gamma(&sheets)?;
                let flat = balsheet::homogenize(&sheets, gamma_bar)?;
                Some(FailureCounts::from(&run_cascade(&flat, network, &portfolio, &shock)?))
            } else {
                None
            };
            Ok(SampleOutcome {
                heterogeneous: FailureCounts::from(&outcome),
                homogeneous,
                total_capital: sheets.iter().map(|s| s.equity).sum(),
            })
        })
        .collect()
}

/// All samples at all grid values, indexed `[grid point][sample]`.
fn simulate_grid(config: &ExperimentConfig, grid: &[f64], baseline: bool) -> Result<Vec<Vec<SampleOutcome>>> {
    config.validate()?;
    if let Some(x) = grid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::invalid("grid", format!("grid values must lie in [0, 1], got {x}")));
    }
    let per_sample: Vec<Vec<SampleOutcome>> = with_pool(config.workers, || {
        (0..config.samples)
            .into_par_iter()
            .map(|i| simulate_sample(config, i, grid, baseline))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok((0..grid.len())
        .map(|g| per_sample.iter().map(|s| s[g]).collect())
        .collect())
}

/// Ensemble at the config's own f (or q).
pub fn run_ensemble(config: &ExperimentConfig) -> Result<EnsembleResult> {
    let grid = [config.grid_value()];
    let outcomes = simulate_grid(config, &grid, config.homogeneous_gamma)?.remove(0);
    let counts: Vec<FailureCounts> = outcomes
        .iter()
        .map(|o| o.homogeneous.unwrap_or(o.heterogeneous))
        .collect();
    EnsembleResult::from_counts(&counts, config.total_banks())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionPoint {
    pub shadow_fraction: f64,
    /// Curve (a): class-specific equity ratios.
    pub heterogeneous: EnsembleResult,
    /// Curve (b): every bank at the sample's Σc/Σa.
    pub homogeneous: EnsembleResult,
    /// Curve (c): F(0) + f·N.
    pub every_shadow_fails: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionSweep {
    pub topology: TopologyKind,
    pub points: Vec<FractionPoint>,
}

/// Shadow-fraction sweep with both baselines.
pub fn sweep_f(base: &ExperimentConfig, grid: &[f64]) -> Result<FractionSweep> {
    if base.topology == TopologyKind::Layered {
        return Err(Error::invalid("topology", "shadow-fraction sweeps need a mixing topology"));
    }
    if grid.is_empty() {
        return Err(Error::Empty("sweep grid"));
    }
    let mut full: Vec<f64> = grid.to_vec();
    let zero_at = match full.iter().position(|&f| f == 0.0) {
        Some(i) => i,
        None => {
            full.push(0.0);
            full.len() - 1
        }
    };
    let outcomes = simulate_grid(base, &full, true)?;
    let n = base.total_banks();
    let summarize = |g: usize| -> Result<(EnsembleResult, EnsembleResult)> {
        let het: Vec<FailureCounts> = outcomes[g].iter().map(|o| o.heterogeneous).collect();
        let hom: Vec<FailureCounts> = outcomes[g]
            .iter()
            .map(|o| o.homogeneous.expect("baseline requested"))
            .collect();
        Ok((EnsembleResult::from_counts(&het, n)?, EnsembleResult::from_counts(&hom, n)?))
    };
    let f0 = summarize(zero_at)?.0.crisis_f as f64;
    let points = grid
        .iter()
        .enumerate()
        .map(|(g, &f)| {
            let (heterogeneous, homogeneous) = summarize(g)?;
            Ok(FractionPoint {
                shadow_fraction: f,
                heterogeneous,
                homogeneous,
                every_shadow_fails: f0 + f * n as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FractionSweep {
        topology: base.topology,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingPoint {
    pub relative_coupling: f64,
    pub result: EnsembleResult,
    /// R(q) = [F(q) − F(0)] / F(0); `None` when F(0) = 0.
    pub ratio_total: Option<f64>,
    pub ratio_shadow: Option<f64>,
    pub ratio_regulated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSweep {
    pub n_per_layer: usize,
    pub points: Vec<CouplingPoint>,
}

fn increase_ratio(at_q: usize, at_zero: usize) -> Option<f64> {
    (at_zero > 0).then(|| (at_q as f64 - at_zero as f64) / at_zero as f64)
}

/// Inter-layer coupling sweep on the layered topology. The grid must
/// contain q = 0, which anchors R(q).
pub fn sweep_q(base: &ExperimentConfig, grid: &[f64]) -> Result<CouplingSweep> {
    if base.topology != TopologyKind::Layered {
        return Err(Error::invalid("topology", "coupling sweeps need the layered topology"));
    }
    let zero_at = grid
        .iter()
        .position(|&q| q == 0.0)
        .ok_or_else(|| Error::invalid("grid", "coupling grid must include q = 0"))?;
    let outcomes = simulate_grid(base, grid, base.homogeneous_gamma)?;
    let results = outcomes
        .iter()
        .map(|samples| {
            let counts: Vec<FailureCounts> = samples
                .iter()
                .map(|o| o.homogeneous.unwrap_or(o.heterogeneous))
                .collect();
            EnsembleResult::from_counts(&counts, base.total_banks())
        })
        .collect::<Result<Vec<_>>>()?;
    let zero = results[zero_at].clone();
    let points = grid
        .iter()
        .zip(results)
        .map(|(&q, result)| CouplingPoint {
            relative_coupling: q,
            ratio_total: increase_ratio(result.crisis_f, zero.crisis_f),
            ratio_shadow: increase_ratio(result.crisis_f_shadow, zero.crisis_f_shadow),
            ratio_regulated: increase_ratio(result.crisis_f_regulated, zero.crisis_f_regulated),
            result,
        })
        .collect();
    Ok(CouplingSweep {
        n_per_layer: base.n_banks,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_order_statistics() {
        let v: Vec<usize> = (1..=1000).collect();
        assert_eq!(quantile_999(&v).unwrap(), 999);
        assert_eq!(quantile_999(&[7]).unwrap(), 7);
        let v: Vec<usize> = (1..=2000).collect();
        assert_eq!(quantile_999(&v).unwrap(), 1998);
        assert_eq!(quantile_999(&[]), Err(Error::Empty("quantile sample")));
    }

    #[test]
    fn crisis_scenario_prefers_more_shadow_failures() {
        let mut counts = vec![FailureCounts::default(); 998];
        counts.push(FailureCounts { total: 5, shadow: 1, regulated: 4 });
        counts.push(FailureCounts { total: 5, shadow: 3, regulated: 2 });
        let r = EnsembleResult::from_counts(&counts, 10).unwrap();
        assert_eq!((r.crisis_f, r.crisis_f_shadow, r.crisis_f_regulated), (5, 3, 2));
        assert_eq!(r.histogram.values().sum::<usize>(), 1000);
    }

    #[test]
    fn ratio_undefined_without_base_failures() {
        assert_eq!(increase_ratio(4, 0), None);
        assert_eq!(increase_ratio(6, 4), Some(0.5));
    }

    fn small(kind: TopologyKind) -> ExperimentConfig {
        ExperimentConfig {
            n_banks: 40,
            denseness: 0.1,
            concentration: 0.4,
            samples: 20,
            ..ExperimentConfig::standard(kind, 0.01)
        }
    }

    #[test]
    fn zero_scale_means_no_failures() {
        let cfg = ExperimentConfig {
            shock_scale: 0.0,
            ..small(TopologyKind::RandomMixing)
        };
        let r = run_ensemble(&cfg).unwrap();
        assert_eq!(r.crisis_f, 0);
        assert_eq!(r.histogram, BTreeMap::from([(0, 20)]));
    }

    #[test]
    fn sweeps_check_topology_and_grid() {
        assert!(sweep_f(&small(TopologyKind::Layered), &[0.0]).is_err());
        assert!(sweep_q(&small(TopologyKind::RandomMixing), &[0.0]).is_err());
        assert!(sweep_q(&small(TopologyKind::Layered), &[0.1, 0.2]).is_err());
        assert!(sweep_f(&small(TopologyKind::RandomMixing), &[1.5]).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = ExperimentConfig {
            samples: 0,
            ..small(TopologyKind::RandomMixing)
        };
        assert!(run_ensemble(&cfg).is_err());
    }
}
