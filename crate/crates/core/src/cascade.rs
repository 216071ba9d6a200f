//! Zero-recovery default cascade.
//!
//! Round 0 applies each bank's external-asset loss. A bank fails once its
//! accumulated loss strictly exceeds its equity; every failed debtor then
//! writes off the full value of its borrowings at each of its creditors.
//! Losses only accumulate, so the result is the least fixed point of a
//! monotone map and does not depend on processing order.

use serde::{Deserialize, Serialize};

use crate::balsheet::BalanceSheet;
use crate::error::{Error, Result};
use crate::netgen::{BankClass, WeightedNetwork};
use crate::shocks::{external_loss, Portfolio, PriceShock};

/// Largest system the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_BANKS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeOutcome {
    pub failed: Vec<bool>,
    pub total: usize,
    pub shadow: usize,
    pub regulated: usize,
    /// Round in which the last bank failed (0 when nothing propagates).
    pub rounds: usize,
}

impl CascadeOutcome {
    fn from_failed(failed: Vec<bool>, classes: &[BankClass], rounds: usize) -> Self {
        let mut shadow = 0;
        let mut regulated = 0;
        for (&f, &class) in failed.iter().zip(classes) {
            if f {
                match class {
                    BankClass::Shadow => shadow += 1,
                    BankClass::Regulated => regulated += 1,
                }
            }
        }
        CascadeOutcome {
            failed,
            total: shadow + regulated,
            shadow,
            regulated,
            rounds,
        }
    }
}

fn check_dimensions(
    sheets: &[BalanceSheet],
    network: &WeightedNetwork,
    portfolio: &Portfolio,
    shock: &PriceShock,
) -> Result<()> {
    let n = network.n_banks();
    if sheets.len() != n {
        return Err(Error::DimensionMismatch(format!("{} balance sheets for {n} banks", sheets.len())));
    }
    if portfolio.n_banks() != n {
        return Err(Error::DimensionMismatch(format!("{} portfolio rows for {n} banks", portfolio.n_banks())));
    }
    if portfolio.n_assets() != shock.n_assets() {
        return Err(Error::DimensionMismatch(format!(
            "portfolio over {} assets, shock over {}",
            portfolio.n_assets(),
            shock.n_assets()
        )));
    }
    Ok(())
}

/// Round-0 distress of every bank.
pub fn initial_losses(sheets: &[BalanceSheet], portfolio: &Portfolio, shock: &PriceShock) -> Vec<f64> {
    sheets
        .iter()
        .zip(portfolio.rows())
        .map(|(s, row)| external_loss(s.external_assets, row, &shock.relative_change))
        .collect()
}

pub fn run_cascade(
    sheets: &[BalanceSheet],
    network: &WeightedNetwork,
    portfolio: &Portfolio,
    shock: &PriceShock,
) -> Result<CascadeOutcome> {
    check_dimensions(sheets, network, portfolio, shock)?;
    let n = network.n_banks();

    // creditors of each debtor, CSR by debtor
    let mut start = vec![0usize; n + 1];
    for (_, d, _) in network.loans() {
        start[d + 1] += 1;
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut exposure = vec![(0u32, 0.0f64); network.topology().n_edges()];
    for (c, d, w) in network.loans() {
        exposure[fill[d]] = (c as u32, w);
        fill[d] += 1;
    }

    let mut loss = initial_losses(sheets, portfolio, shock);
    let mut failed = vec![false; n];
    let mut frontier: Vec<usize> = (0..n).filter(|&i| loss[i] > sheets[i].equity).collect();
    for &i in &frontier {
        failed[i] = true;
    }
    let mut rounds = 0;
    let mut next = Vec::new();
    while !frontier.is_empty() {
        for &debtor in &frontier {
            for &(creditor, w) in &exposure[start[debtor]..start[debtor + 1]] {
                let c = creditor as usize;
                if failed[c] {
                    continue;
                }
                loss[c] += w;
                if loss[c] > sheets[c].equity {
                    failed[c] = true;
                    next.push(c);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        rounds += 1;
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    Ok(CascadeOutcome::from_failed(failed, network.topology().classes(), rounds))
}

/// Exhaustive oracle: enumerates every subset of banks, keeps those that are
/// self-consistent failure sets, and returns the least one. Works on a dense
/// exposure matrix, independently of [`run_cascade`]'s frontier walk.
pub fn brute_force_fixed_point(
    sheets: &[BalanceSheet],
    network: &WeightedNetwork,
    portfolio: &Portfolio,
    shock: &PriceShock,
) -> Result<CascadeOutcome> {
    check_dimensions(sheets, network, portfolio, shock)?;
    let n = network.n_banks();
    if n > BRUTE_FORCE_MAX_BANKS {
        return Err(Error::invalid(
            "n_banks",
            format!("exhaustive search is limited to {BRUTE_FORCE_MAX_BANKS} banks, got {n}"),
        ));
    }
    let mut exposure = vec![vec![0.0; n]; n];
    for (c, d, w) in network.loans() {
        exposure[c][d] += w;
    }
    let own: Vec<f64> = sheets
        .iter()
        .enumerate()
        .map(|(i, s)| external_loss(s.external_assets, portfolio.row(i), &shock.relative_change))
        .collect();

    let image = |set: u32| -> u32 {
        let mut out = 0;
        for i in 0..n {
            let mut loss = own[i];
            for (j, e) in exposure[i].iter().enumerate() {
                if set >> j & 1 == 1 {
                    loss += e;
                }
            }
            if loss > sheets[i].equity {
                out |= 1 << i;
            }
        }
        out
    };

    let fixed: Vec<u32> = (0..1u32 << n).filter(|&s| image(s) == s).collect();
    let least = fixed
        .iter()
        .copied()
        .find(|&s| fixed.iter().all(|&t| s & t == s))
        .ok_or_else(|| Error::NonConvergence("no least failure set".into()))?;

    // Depth of the last failure when growing from the empty set.
    let mut rounds = 0;
    let mut reached = image(0);
    while reached != least {
        let grown = image(reached);
        if grown == reached {
            break;
        }
        reached = grown;
        rounds += 1;
    }
    let failed = (0..n).map(|i| least >> i & 1 == 1).collect();
    Ok(CascadeOutcome::from_failed(failed, network.topology().classes(), rounds))
}
