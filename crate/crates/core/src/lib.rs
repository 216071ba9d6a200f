//! Interbank contagion simulator.
//!
//! Synthesizes financial systems that mix regulated and shadow banks on a
//! directed scale-free loan network, hits them with heavy-tailed external
//! asset shocks and runs the zero-recovery default cascade. The
//! [`ensemble`] module turns single cascades into crisis statistics and
//! sweeps over the shadow-bank fraction or the inter-layer coupling.

pub mod balsheet;
pub mod cascade;
pub mod ensemble;
mod error;
pub mod netgen;
pub mod seeds;
pub mod shocks;

pub use balsheet::{BalanceSheet, SystemParams};
pub use cascade::CascadeOutcome;
pub use ensemble::{EnsembleResult, ExperimentConfig, TopologyKind};
pub use error::{Error, Result};
pub use netgen::{BankClass, Layer, Topology, WeightedNetwork};
pub use shocks::{Portfolio, PriceShock};
