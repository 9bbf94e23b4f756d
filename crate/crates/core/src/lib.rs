//! Simulation and analysis toolkit for time-tagged single-photon
//! correlation experiments.
//!
//! The crate covers the full path from Monte Carlo generation of
//! detector tag streams (HBT, unbalanced Mach-Zehnder HOM, on-chip
//! MMI splitter topologies) through correlation histograms and model
//! fits (antibunching, two-photon interference, lifetime, polarization,
//! saturation power laws) to emitter localization in scan maps and
//! marker-based field registration.
//!
//! Timestamps are integer picoseconds throughout. All simulations are
//! deterministic for a fixed seed.

pub mod analyses;
pub mod correlator;
pub mod fitcore;
pub mod io;
pub mod localizer;
pub mod simkit;
pub mod types;
