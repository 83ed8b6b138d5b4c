//! Simulation and analysis toolkit for a warm-vapor diamond-scheme
//! four-wave-mixing photon-pair source.
//!
//! * [`atomic`]: three-level Lindblad steady states over Doppler velocity
//!   classes.
//! * [`photon`]: synthetic signal/idler time tags, coincidence histograms,
//!   g_si, heralding, dead-time and scaling fits.
//! * [`tomography`]: two-qubit polarization tomography by maximum likelihood.
//!
//! Data-parallel loops (velocity scans, tomography restarts, sweeps) use
//! rayon when the default `parallel` feature is on and fall back to plain
//! iteration otherwise; results are identical either way.

pub mod atomic;
pub mod constants;
pub mod parallel;
pub mod photon;
pub mod tomography;
