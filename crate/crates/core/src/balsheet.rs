//! Per-bank balance sheets.
//!
//! Assets `a = l + e` and liabilities `a = c + b + d`. Each bank is anchored
//! at `a = l / θ` and repaired upward (never downward) until its external
//! assets cover net interbank borrowing and its deposits are non-negative.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{BankClass, WeightedNetwork};

/// Relative tolerance used when checking the accounting identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// θ: Σl / Σa.
    pub interbank_ratio: f64,
    pub gamma_shadow: f64,
    pub gamma_regulated: f64,
}

impl SystemParams {
    pub fn new(interbank_ratio: f64, gamma_shadow: f64, gamma_regulated: f64) -> Result<Self> {
        let p = SystemParams {
            interbank_ratio,
            gamma_shadow,
            gamma_regulated,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.interbank_ratio) {
            return Err(Error::Infeasible(format!(
                "interbank ratio θ must lie in (0, 1), got {}",
                self.interbank_ratio
            )));
        }
        for (name, g) in [("γ_s", self.gamma_shadow), ("γ_r", self.gamma_regulated)] {
            if !open_unit(g) {
                return Err(Error::Infeasible(format!("{name} must lie in (0, 1), got {g}")));
            }
        }
        Ok(())
    }

    pub fn gamma_for(&self, class: BankClass) -> f64 {
        match class {
            BankClass::Shadow => self.gamma_shadow,
            BankClass::Regulated => self.gamma_regulated,
        }
    }

    /// Equity ratio used for the deposit floor. Taking the larger class ratio
    /// keeps asset sizes independent of class labels.
    pub fn gamma_floor(&self) -> f64 {
        self.gamma_shadow.max(self.gamma_regulated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceSheet {
    pub assets: f64,
    pub interbank_loans: f64,
    pub external_assets: f64,
    pub equity: f64,
    pub interbank_borrowings: f64,
    pub deposits: f64,
    pub equity_ratio: f64,
}

impl BalanceSheet {
    /// Closes a sheet from its asset side, borrowings and equity ratio.
    pub fn from_parts(interbank_loans: f64, external_assets: f64, interbank_borrowings: f64, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Infeasible(format!("equity ratio must lie in [0, 1), got {gamma}")));
        }
        let assets = interbank_loans + external_assets;
        let equity = gamma * assets;
        let deposits = assets - equity - interbank_borrowings;
        Ok(BalanceSheet {
            assets,
            interbank_loans,
            external_assets,
            equity,
            interbank_borrowings,
            deposits,
            equity_ratio: gamma,
        })
    }

    /// Largest violation of `a = l + e` and `a = c + b + d`, relative to `a`.
    pub fn identity_residual(&self) -> f64 {
        let scale = self.assets.abs().max(f64::MIN_POSITIVE);
        let asset_side = (self.assets - self.interbank_loans - self.external_assets).abs();
        let liability_side = (self.assets - self.equity - self.interbank_borrowings - self.deposits).abs();
        asset_side.max(liability_side) / scale
    }

    /// Checks every sheet invariant at [`IDENTITY_TOLERANCE`].
    pub fn is_consistent(&self) -> bool {
        let tol = IDENTITY_TOLERANCE * self.assets.max(1e-300);
        let fields = [
            self.assets,
            self.interbank_loans,
            self.external_assets,
            self.equity,
            self.interbank_borrowings,
        ];
        self.identity_residual() <= IDENTITY_TOLERANCE
            && fields.iter().all(|&x| x >= 0.0)
            && self.deposits >= -tol
            && self.external_assets >= self.interbank_borrowings - self.interbank_loans - tol
            && (self.equity - self.equity_ratio * self.assets).abs() <= tol
    }
}

/// Total assets each bank will carry, independent of its class label.
pub fn provisional_assets(network: &WeightedNetwork, params: &SystemParams) -> Result<Vec<f64>> {
    params.validate()?;
    let theta = params.interbank_ratio;
    let floor = params.gamma_floor();
    let loans = network.loans_made();
    let borrowings = network.borrowings();
    Ok(loans
        .iter()
        .zip(&borrowings)
        .map(|(&l, &b)| external_assets(l, b, theta, floor) + l)
        .collect())
}

fn external_assets(l: f64, b: f64, theta: f64, gamma_floor: f64) -> f64 {
    let anchor = l * (1.0 - theta) / theta;
    // e ≥ b − l, and d ≥ 0 ⇔ a ≥ b / (1 − γ)
    let net_borrowing = b - l;
    let deposit_floor = b / (1.0 - gamma_floor) - l;
    anchor.max(net_borrowing).max(deposit_floor).max(0.0)
}

/// Balance sheets for every bank, equity ratio chosen by class.
pub fn synthesize(network: &WeightedNetwork, params: &SystemParams) -> Result<Vec<BalanceSheet>> {
    params.validate()?;
    let theta = params.interbank_ratio;
    let floor = params.gamma_floor();
    let loans = network.loans_made();
    let borrowings = network.borrowings();
    network
        .topology()
        .classes()
        .iter()
        .zip(loans.iter().zip(&borrowings))
        .map(|(&class, (&l, &b))| {
            BalanceSheet::from_parts(l, external_assets(l, b, theta, floor), b, params.gamma_for(class))
        })
        .collect()
}

/// Realized Σl / Σa.
pub fn realized_interbank_ratio(sheets: &[BalanceSheet]) -> f64 {
    let l: f64 = sheets.iter().map(|s| s.interbank_loans).sum();
    let a: f64 = sheets.iter().map(|s| s.assets).sum();
    l / a
}

/// System-wide equity ratio Σc / Σa.
pub fn average_gamma(sheets: &[BalanceSheet]) -> Result<f64> {
    if sheets.is_empty() {
        return Err(Error::Empty("balance sheets"));
    }
    let c: f64 = sheets.iter().map(|s| s.equity).sum();
    let a: f64 = sheets.iter().map(|s| s.assets).sum();
    if a <= 0.0 {
        return Err(Error::Infeasible("system holds no assets".into()));
    }
    Ok(c / a)
}

/// Same sheets with every bank at equity ratio `gamma`: only the
/// equity/deposit split moves.
pub fn homogenize(sheets: &[BalanceSheet], gamma: f64) -> Result<Vec<BalanceSheet>> {
    sheets
        .iter()
        .map(|s| BalanceSheet::from_parts(s.interbank_loans, s.external_assets, s.interbank_borrowings, gamma))
        .collect()
}

/// CSV dump with columns `bank,class,a,l,e,c,b,d,gamma`.
pub fn write_sheets_csv<W: Write>(sheets: &[BalanceSheet], classes: &[BankClass], mut out: W) -> io::Result<()> {
    writeln!(out, "bank,class,a,l,e,c,b,d,gamma")?;
    for (i, (s, class)) in sheets.iter().zip(classes).enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{}",
            class.code(),
            s.assets,
            s.interbank_loans,
            s.external_assets,
            s.equity,
            s.interbank_borrowings,
            s.deposits,
            s.equity_ratio
        )?;
    }
    Ok(())
}
