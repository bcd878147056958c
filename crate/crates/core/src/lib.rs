//! Runtime mode selection for best-effort in-vehicle services.
//!
//! The crate generates random application stores with degraded modes and
//! mode-level dependencies, picks a mode per application with a greedy
//! AXIL-per-resource heuristic (or an exhaustive oracle on small inputs), and
//! replays request scenarios on a modelled star network of ECUs to compare
//! the optimized selection against launching everything at nominal mode.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axil;
pub mod cli;
pub mod generator;
pub mod io;
pub mod metrics;
pub mod model;
pub mod simulator;
pub mod solver;
