//! Command-line front end for the vessel tracking controller: scenario
//! loading and validation, closed-loop runs with CSV/figure export, and
//! parameter sweeps.

pub mod commands;
pub mod plots;
pub mod report;
pub mod scenario;
pub mod sweep;
