use serde::{Deserialize, Serialize};

use crate::constants::{mhz_to_rad_per_s, BOLTZMANN, RB87_MASS, SPEED_OF_LIGHT, ZERO_CELSIUS};

use super::AtomicError;

/// Drive and decay parameters of the ground / intermediate / top ladder.
///
/// All frequencies are angular (rad/s). Detunings are the values seen by an
/// atom at rest; [`doppler_shifted_detunings`](super::doppler_shifted_detunings)
/// moves them into the frame of a moving atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeLevelParams {
    /// Pump Rabi frequency (ground ↔ intermediate).
    pub omega_p: f64,
    /// Coupling Rabi frequency (intermediate ↔ top).
    pub omega_c: f64,
    /// Single-photon pump detuning at v = 0.
    pub delta_1: f64,
    /// Two-photon detuning at v = 0.
    pub delta_2: f64,
    /// Pump wavelength, m.
    pub lambda_p: f64,
    /// Coupling wavelength, m.
    pub lambda_c: f64,
    /// Total decay rate of the intermediate state.
    pub gamma_e: f64,
    /// Total decay rate of the top state.
    pub gamma_t: f64,
    /// Fraction of top-state decay that lands in the intermediate state; the
    /// rest goes straight to ground (the unobserved cascade lumped together).
    pub branch_te: f64,
}

impl ThreeLevelParams {
    /// ⁸⁷Rb 5S₁/₂ → 5P₃/₂ → 6S₁/₂ with 780 nm pump and 1367 nm coupling,
    /// Ω_p = Ω_c = 2π×350 MHz, Δ = 2π×1150 MHz and δ = −2π×500 MHz.
    ///
    /// Decay constants are literature values: Γ(5P₃/₂) = 2π×6.07 MHz,
    /// Γ(6S₁/₂) = 2π×3.45 MHz, and 49 % of 6S₁/₂ decay via 5P₃/₂.
    pub fn rb87_diamond() -> Self {
        Self {
            omega_p: mhz_to_rad_per_s(350.0),
            omega_c: mhz_to_rad_per_s(350.0),
            delta_1: mhz_to_rad_per_s(1150.0),
            delta_2: mhz_to_rad_per_s(-500.0),
            lambda_p: 780e-9,
            lambda_c: 1367e-9,
            gamma_e: mhz_to_rad_per_s(6.07),
            gamma_t: mhz_to_rad_per_s(3.45),
            branch_te: 0.49,
        }
    }

    /// Angular frequency of the top state above ground, 2πc(1/λ_p + 1/λ_c).
    pub fn omega_top(&self) -> f64 {
        std::f64::consts::TAU * SPEED_OF_LIGHT * (1.0 / self.lambda_p + 1.0 / self.lambda_c)
    }

    /// Pump wavenumber 2π/λ_p, rad/m.
    pub fn k_pump(&self) -> f64 {
        std::f64::consts::TAU / self.lambda_p
    }

    pub fn validate(&self) -> Result<(), AtomicError> {
        let finite = [
            ("omega_p", self.omega_p),
            ("omega_c", self.omega_c),
            ("delta_1", self.delta_1),
            ("delta_2", self.delta_2),
            ("lambda_p", self.lambda_p),
            ("lambda_c", self.lambda_c),
            ("gamma_e", self.gamma_e),
            ("gamma_t", self.gamma_t),
            ("branch_te", self.branch_te),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(AtomicError::invalid(name, "must be finite"));
            }
        }
        for (name, value) in [
            ("omega_p", self.omega_p),
            ("omega_c", self.omega_c),
            ("gamma_e", self.gamma_e),
            ("gamma_t", self.gamma_t),
        ] {
            if value < 0.0 {
                return Err(AtomicError::invalid(name, "must be non-negative"));
            }
        }
        if self.lambda_p <= 0.0 {
            return Err(AtomicError::invalid("lambda_p", "must be positive"));
        }
        if self.lambda_c <= 0.0 {
            return Err(AtomicError::invalid("lambda_c", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.branch_te) {
            return Err(AtomicError::invalid("branch_te", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

impl Default for ThreeLevelParams {
    fn default() -> Self {
        Self::rb87_diamond()
    }
}

/// Thermal vapor description for Doppler weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaporParams {
    /// Temperature, K.
    pub temperature: f64,
    /// Atomic mass, kg.
    pub atomic_mass: f64,
}

impl VaporParams {
    pub fn rb87_celsius(celsius: f64) -> Self {
        Self {
            temperature: celsius + ZERO_CELSIUS,
            atomic_mass: RB87_MASS,
        }
    }

    /// 1-D velocity spread sqrt(k_B T / m), m/s.
    pub fn velocity_sigma(&self) -> f64 {
        (BOLTZMANN * self.temperature / self.atomic_mass).sqrt()
    }

    pub fn validate(&self) -> Result<(), AtomicError> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(AtomicError::invalid("temperature", "must be positive"));
        }
        if !(self.atomic_mass.is_finite() && self.atomic_mass > 0.0) {
            return Err(AtomicError::invalid("atomic_mass", "must be positive"));
        }
        Ok(())
    }
}

impl Default for VaporParams {
    /// ⁸⁷Rb at 80 °C.
    fn default() -> Self {
        Self::rb87_celsius(80.0)
    }
}
