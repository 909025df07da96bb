//! Numerical laboratory for EIT slow and stored light in a three-level
//! Lambda medium.
//!
//! - [`units`], [`scaling`], [`spectrum`]: dimensionless conventions, closed-form
//!   EIT scaling laws and the steady-state transmission profile.
//! - [`propagation`]: the space-time solver and storage loss ledger.
//! - [`optimizer`]: time-reversal iteration of the input pulse shape.
//! - [`decoherence`]: density-dependent spin decay and slow/stored accounting.
//! - [`radtrap`]: Monte Carlo radiation trapping and the absorption-linewidth proxy.
//! - [`config`], [`harness`]: key=value scenario files, sweeps and CSV output.

pub mod config;
pub mod control;
pub mod decoherence;
pub mod envelope;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod propagation;
pub mod radtrap;
pub mod scaling;
pub mod spectrum;
pub mod units;

pub use control::ControlSchedule;
pub use envelope::{efficiency, Envelope};
pub use error::{Error, Result};
pub use propagation::{evolve, store_and_retrieve, Grid, SimState, StorageReport};
pub use units::{MediumParams, PhysicalCell};
