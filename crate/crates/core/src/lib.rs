//! Simulation suite for testing whether atoms trapped in a box with
//! evanescent-wave mirror walls are in motion.
//!
//! Two predictions are modeled side by side:
//!
//! * the orthodox (Born-rule) prediction, where each bounce carries a wall
//!   momentum drawn from the particle-in-a-box momentum density, and
//! * the pilot-wave prediction, where a particle guided by a stationary
//!   state has zero velocity and never reaches the mirrors.
//!
//! The modules follow the measurement chain: [`wellqm`] and [`momentum`]
//! describe the trapped state, [`pilotwave`] integrates guidance-law
//! trajectories, [`mirror`] covers the evanescent barrier, [`phaseshift`]
//! turns a bouncing atom into a laser phase shift and back, and
//! [`experiment`] runs Monte Carlo discrimination and power analysis.
//! [`config`] and [`io`] hold the file formats used by the command-line tool.

pub mod config;
pub mod constants;
pub mod error;
pub mod experiment;
pub mod io;
pub mod mirror;
pub mod momentum;
pub mod ode;
pub mod phaseshift;
pub mod pilotwave;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod vec3;
pub mod wellqm;

pub use error::{Error, ErrorCategory};
pub use vec3::Vec3;
