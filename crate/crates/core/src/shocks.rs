//! Investment portfolios and external-asset price shocks.
//!
//! Prices move by `s · T` with `T` Student-t distributed (μ = 1.5 by
//! default), clamped at −1 because a price cannot go negative. The amplitude
//! `s` is calibrated so that a bank holding only external assets, with a
//! fresh random portfolio, fails with a target probability.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{self, stream};

pub const DEFAULT_DOF: f64 = 1.5;
pub const DEFAULT_CALIBRATION_GAMMA: f64 = 0.07;
pub const DEFAULT_TARGET_P: f64 = 1e-3;
pub const DEFAULT_CALIBRATION_TRIALS: u64 = 10_000_000;

const CHUNK: u64 = 1 << 16;
const BISECTION_STEPS: usize = 60;
const MAX_BRACKET_DOUBLINGS: usize = 40;

/// Row-stochastic N×M allocation of each bank's external assets.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    n_assets: usize,
    allocation: Vec<f64>,
}

impl Portfolio {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_assets = rows.first().map_or(0, Vec::len);
        if n_assets == 0 {
            return Err(Error::invalid("n_assets", "portfolio needs at least one asset class"));
        }
        let mut allocation = Vec::with_capacity(rows.len() * n_assets);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_assets {
                return Err(Error::DimensionMismatch(format!("row {i} has {} entries, expected {n_assets}", row.len())));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 || row.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::invalid("allocation", format!("row {i} is not a probability vector")));
            }
            allocation.extend_from_slice(row);
        }
        Ok(Portfolio { n_assets, allocation })
    }

    pub fn n_banks(&self) -> usize {
        self.allocation.len() / self.n_assets
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn row(&self, bank: usize) -> &[f64] {
        &self.allocation[bank * self.n_assets..(bank + 1) * self.n_assets]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.allocation.chunks_exact(self.n_assets)
    }
}

/// Uniform draw on the probability simplex. For two assets this is
/// `(U, 1 − U)` with `U ~ Uniform(0, 1)`.
fn fill_allocation<R: Rng>(row: &mut [f64], rng: &mut R) {
    match row.len() {
        1 => row[0] = 1.0,
        2 => {
            let u: f64 = rng.random();
            row[0] = u;
            row[1] = 1.0 - u;
        }
        _ => {
            for x in row.iter_mut() {
                *x = Exp1.sample(rng);
            }
            let total: f64 = row.iter().sum();
            for x in row.iter_mut() {
                *x /= total;
            }
        }
    }
}

pub fn sample_portfolio(n_banks: usize, n_assets: usize, seed: u64) -> Result<Portfolio> {
    if n_assets == 0 {
        return Err(Error::invalid("n_assets", "must be ≥ 1"));
    }
    let mut rng = seeds::rng_from(seed);
    let mut allocation = vec![0.0; n_banks * n_assets];
    for row in allocation.chunks_exact_mut(n_assets) {
        fill_allocation(row, &mut rng);
    }
    Ok(Portfolio { n_assets, allocation })
}

/// Signed relative price change per asset class (−0.2 is a 20 % fall).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceShock {
    pub relative_change: Vec<f64>,
    pub scale: f64,
    pub dof: f64,
}

impl PriceShock {
    /// No price movement at all.
    pub fn none(n_assets: usize) -> Self {
        PriceShock {
            relative_change: vec![0.0; n_assets],
            scale: 0.0,
            dof: DEFAULT_DOF,
        }
    }

    pub fn n_assets(&self) -> usize {
        self.relative_change.len()
    }
}

fn validate_shape(scale: f64, dof: f64) -> Result<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid("scale", format!("must be positive, got {scale}")));
    }
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::invalid("dof", format!("must be positive, got {dof}")));
    }
    Ok(())
}

#[inline]
fn clamp_change(x: f64) -> f64 {
    x.max(-1.0)
}

pub fn sample_shock(n_assets: usize, scale: f64, dof: f64, seed: u64) -> Result<PriceShock> {
    if n_assets == 0 {
        return Err(Error::invalid("n_assets", "must be ≥ 1"));
    }
    validate_shape(scale, dof)?;
    let t = StudentT::new(dof).map_err(|e| Error::invalid("dof", e.to_string()))?;
    let mut rng = seeds::rng_from(seed);
    let relative_change = (0..n_assets)
        .map(|_| clamp_change(scale * t.sample(&mut rng)))
        .collect();
    Ok(PriceShock {
        relative_change,
        scale,
        dof,
    })
}

/// Initial distress of a bank: `−e · Σ_m X_m v_m`. Positive is a loss,
/// negative a gain.
#[inline]
pub fn external_loss(external_assets: f64, allocation: &[f64], change: &[f64]) -> f64 {
    -external_assets * allocation.iter().zip(change).map(|(x, v)| x * v).sum::<f64>()
}

/// Standalone bank used by the calibration: `e = a = 1`, `c = γ`.
#[inline]
fn standalone_fails(allocation: &[f64], change: &[f64], gamma: f64) -> bool {
    external_loss(1.0, allocation, change) > gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub n_assets: usize,
    pub gamma: f64,
    pub target_p: f64,
    pub dof: f64,
    pub trials: u64,
    pub seed: u64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        CalibrationTarget {
            n_assets: 2,
            gamma: DEFAULT_CALIBRATION_GAMMA,
            target_p: DEFAULT_TARGET_P,
            dof: DEFAULT_DOF,
            trials: DEFAULT_CALIBRATION_TRIALS,
            seed: 0x5EED_CA11,
        }
    }
}

impl CalibrationTarget {
    fn validate(&self) -> Result<()> {
        if self.n_assets == 0 {
            return Err(Error::invalid("n_assets", "must be ≥ 1"));
        }
        if !(self.target_p > 0.0 && self.target_p < 0.5) {
            return Err(Error::invalid("target_p", format!("must lie in (0, 0.5), got {}", self.target_p)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("gamma", format!("must lie in (0, 1), got {}", self.gamma)));
        }
        validate_shape(1.0, self.dof)?;
        let needed = (20.0 / self.target_p).ceil() as u64;
        if self.trials < needed {
            return Err(Error::invalid(
                "trials",
                format!("{} trials cannot resolve p = {}; need ≥ {needed}", self.trials, self.target_p),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub scale: f64,
    /// Failure probability on the calibration sample at `scale`.
    pub estimated_p: f64,
    /// Trials that could fail anywhere in the search bracket.
    pub tail_trials: usize,
}

/// Trials of the standalone bank, keeping only those whose worst raw draw
/// `min_m T_m` lies below `−threshold`. A trial can only fail at scale `s`
/// if `−s · min_m T_m > γ`, so the kept set is exact for every
/// `s ≤ γ / threshold`.
struct TailSample {
    n_assets: usize,
    trials: u64,
    /// Per kept trial: allocation (M values) then raw t draws (M values).
    kept: Vec<f64>,
}

impl TailSample {
    fn draw(target: &CalibrationTarget, trials: u64, threshold: f64, pass: u64) -> Result<Self> {
        let m = target.n_assets;
        let t = StudentT::new(target.dof).map_err(|e| Error::invalid("dof", e.to_string()))?;
        let n_chunks = trials.div_ceil(CHUNK);
        let chunks: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = seeds::child_rng(target.seed, &[stream::CALIBRATION, pass, chunk]);
                let len = CHUNK.min(trials - chunk * CHUNK);
                let mut row = vec![0.0; 2 * m];
                let mut kept = Vec::new();
                for _ in 0..len {
                    let (alloc, draws) = row.split_at_mut(m);
                    fill_allocation(alloc, &mut rng);
                    let mut worst = f64::INFINITY;
                    for d in draws.iter_mut() {
                        *d = t.sample(&mut rng);
                        worst = worst.min(*d);
                    }
                    if worst < -threshold {
                        kept.extend_from_slice(&row);
                    }
                }
                kept
            })
            .collect();
        Ok(TailSample {
            n_assets: m,
            trials,
            kept: chunks.concat(),
        })
    }

    fn failure_probability(&self, scale: f64, gamma: f64) -> f64 {
        let m = self.n_assets;
        let mut change = vec![0.0; m];
        let failures = self
            .kept
            .chunks_exact(2 * m)
            .filter(|row| {
                let (alloc, draws) = row.split_at(m);
                for (v, &d) in change.iter_mut().zip(draws) {
                    *v = clamp_change(scale * d);
                }
                standalone_fails(alloc, &change, gamma)
            })
            .count();
        failures as f64 / self.trials as f64
    }

    fn len(&self) -> usize {
        self.kept.len() / (2 * self.n_assets)
    }

    /// Bisection for the scale where the estimated failure probability
    /// crosses `target_p`, inside `(0, hi]`.
    fn bisect(&self, target: &CalibrationTarget, hi: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, hi);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.failure_probability(mid, target.gamma) < target.target_p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Finds the shock amplitude at which a standalone bank with equity ratio
/// `γ` fails with probability `target_p`.
///
/// A pilot run on a smaller sample brackets the answer; the full run then
/// keeps only tail trials (see [`TailSample`]) so every bisection step is a
/// cheap recount over common random numbers.
pub fn calibrate_amplitude(target: &CalibrationTarget) -> Result<Calibration> {
    target.validate()?;
    let pilot_trials = target.trials.min(((200.0 / target.target_p) as u64).max(100_000));
    let pilot = TailSample::draw(target, pilot_trials, 0.0, 0)?;
    let mut hi = target.gamma;
    let mut doublings = 0;
    while pilot.failure_probability(hi, target.gamma) < target.target_p {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::NonConvergence(format!(
                "no scale up to {hi:e} reaches p = {}",
                target.target_p
            )));
        }
    }
    let rough = pilot.bisect(target, hi);

    let mut cap = 4.0 * rough;
    for pass in 1..=8 {
        let sample = TailSample::draw(target, target.trials, target.gamma / cap, pass)?;
        if sample.failure_probability(cap, target.gamma) < target.target_p {
            cap *= 2.0;
            continue;
        }
        let scale = sample.bisect(target, cap);
        return Ok(Calibration {
            scale,
            estimated_p: sample.failure_probability(scale, target.gamma),
            tail_trials: sample.len(),
        });
    }
    Err(Error::NonConvergence(format!(
        "bracket [0, {cap:e}] still misses p = {} after 8 passes",
        target.target_p
    )))
}

/// Fresh Monte Carlo estimate of the standalone failure probability at a
/// given scale, sampling portfolios and shocks exactly as the ensemble does.
pub fn standalone_failure_probability(
    scale: f64,
    n_assets: usize,
    gamma: f64,
    dof: f64,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    if n_assets == 0 {
        return Err(Error::invalid("n_assets", "must be ≥ 1"));
    }
    validate_shape(scale, dof)?;
    let t = StudentT::new(dof).map_err(|e| Error::invalid("dof", e.to_string()))?;
    let failures: u64 = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = seeds::child_rng(seed, &[stream::CALIBRATION, u64::MAX, chunk]);
            let len = CHUNK.min(trials - chunk * CHUNK);
            let mut alloc = vec![0.0; n_assets];
            let mut change = vec![0.0; n_assets];
            let mut failures = 0u64;
            for _ in 0..len {
                fill_allocation(&mut alloc, &mut rng);
                for v in change.iter_mut() {
                    *v = clamp_change(scale * t.sample(&mut rng));
                }
                failures += standalone_fails(&alloc, &change, gamma) as u64;
            }
            failures
        })
        .sum();
    Ok(failures as f64 / trials as f64)
}
