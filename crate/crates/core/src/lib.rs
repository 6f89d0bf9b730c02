//! Simulation and saturated global tracking control for underactuated
//! 3-DOF surface vessels (surge force and yaw moment actuation only).
//!
//! The crate is organized around the pipeline of a tracking experiment:
//!
//! - [`model`]: physical dynamics and the normalization to the control model
//! - [`mod@reference`]: virtual-vessel trajectory generation and diagnostics
//! - [`control`]: saturated feedback laws and gain synthesis
//! - [`observer`]: velocity estimation for output feedback
//! - [`sim`]: the fixed-step closed-loop simulator and parameter sweeps
//! - [`record`]: recorded runs and their CSV schema

pub mod control;
pub mod error;
pub mod model;
pub mod observer;
pub mod record;
pub mod reference;
pub mod sim;

pub use error::VesselError;
