//! Steady-state response of a Doppler-broadened three-level ladder
//! (ground → intermediate → top) driven by a pump and a coupling laser.

mod dynamics;
mod params;
mod profile;
mod steady;

use thiserror::Error;

pub use dynamics::{
    build_hamiltonian, build_liouvillian, decay_channels, doppler_shifted_detunings,
    hamiltonian_with_couplings, liouvillian_from, resonant_velocity, unvec, vec, DecayChannel,
    Liouvillian, Operator3, SuperOp9, VecRho, GROUND, INTERMEDIATE, TOP,
};
pub use params::{ThreeLevelParams, VaporParams};
pub use profile::{
    default_velocity_grid, linspace, mb_weight, pearson, profile_mb_overlap,
    scattering_probability, velocity_scan, velocity_scan_sequential, Normalization,
    ScatteringProfile, DEFAULT_GRID_POINTS, DEFAULT_GRID_SIGMAS,
};
pub use steady::{steady_state, DensityMatrix3, SteadyStateCheck};

#[derive(Debug, Error)]
pub enum AtomicError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("no unique steady state (null space dimension {nullity})")]
    NoUniqueSteadyState { nullity: usize },
    #[error("at velocity {velocity} m/s: {source}")]
    AtVelocity {
        velocity: f64,
        #[source]
        source: Box<AtomicError>,
    },
    #[error("velocity grid must be non-empty and strictly increasing (index {index})")]
    UnsortedGrid { index: usize },
    #[error("profile has fewer than 3 points or zero variance")]
    DegenerateProfile,
}

impl AtomicError {
    pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Self {
        Self::InvalidParameter { name, reason }
    }
}
