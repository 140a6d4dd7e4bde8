//! Exact simulation of multitime two-way quantum communication protocols:
//! channel-usage Costs, Gram-matrix bookkeeping over direct-sum Hilbert
//! spaces, and the Cost trade-off bound that relates them.
//!
//! Modules, bottom-up:
//! - [`state`]: state vectors on labeled A/C/B partitions and unitary primitives
//! - [`ledger`]: channel transits, Costs, Gram reports, the trade-off bound
//! - [`protocols`]: one-way, simple two-way, polarization and SLAZ runs
//! - [`analysis`]: closed-form asymptotics and parameter sweeps
//! - [`verify`]: the self-check suite behind `qcost verify`
//! - [`report`] / [`cli`]: JSON/CSV documents and the command-line front end

pub mod analysis;
pub mod cli;
pub mod error;
pub mod exec;
pub mod ledger;
pub mod protocols;
pub mod report;
pub mod state;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
