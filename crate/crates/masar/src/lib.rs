//! Simulation and calibration toolkit for an optically pumped molecular-spin
//! refrigerator coupled to a microwave cavity mode.
//!
//! The crate models the kinetics of photo-excited pentacene triplets coupled
//! to the photon number of a dielectric cavity mode, the noise chain of the
//! heterodyne receiver used to observe the mode, and the analysis pipeline
//! that converts measured noise-power reductions into mode temperatures.
//!
//! Modules:
//! - [`spin_dynamics`]: the five-level rate-equation model and optical pumping.
//! - [`cavity_photon`]: spin-photon coupling, photon-number rate equation,
//!   magnetic loss, reflection coefficient and mode temperature.
//! - [`integrator`]: fixed-step RK4 integration of the coupled system.
//! - [`receiver_noise`]: noise-wave model of the heterodyne front end and the
//!   power-reduction calibration curve with its inverse.
//! - [`epr_analysis`]: zero-field spin temperature, TR-EPR simulation and
//!   bi-exponential fitting with confidence bands.
//! - [`cli_io`]: configuration, CSV serialization and the command pipeline.

pub mod cavity_photon;
pub mod cli_io;
pub mod constants;
pub mod epr_analysis;
pub mod error;
pub mod integrator;
pub mod receiver_noise;
pub mod spin_dynamics;

pub use error::{Error, Result};
