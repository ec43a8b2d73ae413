//! Resilience simulation for RIS-assisted cell-free MIMO downlinks.
//!
//! The crate covers the whole pipeline of a blockage experiment:
//!
//! - [`system`]: scenario constants, random topology and channel generation
//!   (with spatially correlated RIS links) and direct-link blockage.
//! - [`metrics`]: SINR, achievable rates, the adaption gap `Ψ` and the
//!   absorption / adaption / time-to-recovery resilience metric.
//! - [`conic`]: a solver-agnostic convex program representation with an
//!   interior-point backend and an independent feasibility checker.
//! - [`sca`]: the beamforming and phase-shift successive convex
//!   approximation sub-problems, closed-form rate adaption and the
//!   resilience-aware alternating optimization loop.
//! - [`sim`]: end-to-end outage scenarios, Monte Carlo replication and the
//!   weight / element-count sweeps.
//! - [`config`] and [`plotdata`]: run configuration files and tidy CSV export
//!   used by the `risres` binary.

pub mod conic;
pub mod config;
pub mod error;
pub mod metrics;
pub mod plotdata;
pub mod sca;
pub mod sim;
pub mod system;

pub use error::{Error, Result};
