//! Physical constants (SI, CODATA 2018 exact where defined).

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Mass of a ⁸⁷Rb atom, kg.
pub const RB87_MASS: f64 = 1.443_160_648e-25;
/// 0 °C in kelvin.
pub const ZERO_CELSIUS: f64 = 273.15;
/// FWHM of a unit-sigma Gaussian, 2·sqrt(2 ln 2).
pub const GAUSSIAN_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;
/// Time-bandwidth product Δν·Δt (both FWHM) used to turn a correlation time
/// into a linewidth. The exact Gaussian value is 2 ln 2/π ≈ 0.4413; the
/// conventional rounded 0.44 is used.
pub const GAUSSIAN_TIME_BANDWIDTH: f64 = 0.44;

/// Angular frequency 2π·f for `mhz` megahertz.
pub fn mhz_to_rad_per_s(mhz: f64) -> f64 {
    std::f64::consts::TAU * mhz * 1e6
}

pub fn rad_per_s_to_mhz(omega: f64) -> f64 {
    omega / (std::f64::consts::TAU * 1e6)
}
