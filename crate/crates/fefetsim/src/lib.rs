//! Desk-scale simulator of multi-level-cell FeFET embedded non-volatile memory.
//!
//! The crate models the full path from stochastic polarization switching in
//! individual ferroelectric domains up to application-level fault injection:
//!
//! * [`device`] — multi-domain FeFET cell with device-to-device variation and
//!   exact pulse-train dose accumulation,
//! * [`sensing`] — geometric reference thresholds and a flash-ADC style
//!   quantizer with proportional Gaussian variation,
//! * [`programming`] — single-pulse and write-verify programming engines plus
//!   population statistics over Monte Carlo ensembles,
//! * [`fault`] — confusion matrices and shmoo sweeps over cell size, bits per
//!   cell, and programming scheme,
//! * [`array`] — an analytical area/latency/energy model for AND-array FeFET
//!   memories with organization sweep,
//! * [`workloads`] — graph BFS and quantized-classifier fault injection,
//! * [`config`] — TOML experiment configuration shared by the CLI.
//!
//! All randomness flows from a 64-bit master seed through per-purpose,
//! per-index streams (see [`seed`]), so every result is reproducible and
//! independent of thread count.

pub mod array;
pub mod config;
pub mod device;
pub mod fault;
pub mod programming;
pub mod seed;
pub mod sensing;
pub mod workloads;
